use std::io::{Read, Write};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::response::IntoResponse;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use logtally_cli::server::{self, router, DEFAULT_BODY_LIMIT};
use logtally_core::morphology::{make_ground_truth, GroundTruthMode};
use logtally_core::pipeline::EvalReport;
use logtally_core::{raster, synthgen, SynthSpec};

fn scene_png(n: usize, seed: u64) -> (Vec<u8>, Vec<u8>) {
    let scene = synthgen::generate(&SynthSpec {
        n_logs: n,
        seed,
        ..SynthSpec::default()
    })
    .unwrap();
    let red = make_ground_truth(&scene.gt_instances, GroundTruthMode::FlatRed).unwrap();
    (
        raster::encode_png(&red).unwrap(),
        raster::encode_labels_png(&scene.gt_instances).unwrap(),
    )
}

async fn send(req: Request<Body>, limit: usize) -> (StatusCode, Vec<u8>) {
    let resp = router(limit).oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    (status, body)
}

fn post(uri: &str, body: Vec<u8>) -> Request<Body> {
    Request::post(uri).body(Body::from(body)).unwrap()
}

fn multipart(fields: &[(&str, &[u8])]) -> (String, Vec<u8>) {
    let boundary = "logtally-test-boundary";
    let mut body = Vec::new();
    for (name, data) in fields {
        write!(
            body,
            "--{boundary}\r\nContent-Disposition: form-data; name=\"{name}\"; filename=\"{name}.png\"\r\nContent-Type: image/png\r\n\r\n"
        )
        .unwrap();
        body.extend_from_slice(data);
        body.extend_from_slice(b"\r\n");
    }
    write!(body, "--{boundary}--\r\n").unwrap();
    (format!("multipart/form-data; boundary={boundary}"), body)
}

#[tokio::test]
async fn healthz_ok() {
    let (status, body) = send(
        Request::get("/healthz").body(Body::empty()).unwrap(),
        DEFAULT_BODY_LIMIT,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["status"], "ok");
}

#[tokio::test]
async fn count_ten_disc_scene() {
    let (png, _) = scene_png(10, 3);
    let (status, body) = send(post("/v1/count", png), DEFAULT_BODY_LIMIT).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["count"], 10);
    assert_eq!(v["source"], "upload");
    assert!(v.get("timing_ms").is_none());
}

#[tokio::test]
async fn count_query_parameters() {
    let (png, _) = scene_png(5, 4);
    let (status, body) = send(
        post(
            "/v1/count?counter=hough&source=abc&timings=true",
            png.clone(),
        ),
        DEFAULT_BODY_LIMIT,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["count"], 5);
    assert_eq!(v["source"], "abc");
    assert!(v["detections"]["circles"].is_array());
    assert!(v["timing_ms"]["count"].is_number());

    let (status, body) = send(post("/v1/count?wat=1", png.clone()), DEFAULT_BODY_LIMIT).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert!(v["error"].is_string());
    let (status, _) = send(post("/v1/count?connectivity=5", png), DEFAULT_BODY_LIMIT).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn malformed_and_truncated_images() {
    let (status, body) = send(
        post("/v1/count", b"definitely not a png".to_vec()),
        DEFAULT_BODY_LIMIT,
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert!(v["error"].is_string());

    let (png, _) = scene_png(3, 1);
    let cut = png[..png.len() / 2].to_vec();
    let (status, _) = send(post("/v1/count", cut), DEFAULT_BODY_LIMIT).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send(post("/v1/count", Vec::new()), DEFAULT_BODY_LIMIT).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn oversized_body_is_413() {
    let (png, _) = scene_png(3, 1);
    let (status, _) = send(post("/v1/count", png.clone()), png.len() - 1).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    let (status, _) = send(post("/v1/count", png.clone()), png.len()).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn evaluate_multipart_pair() {
    let (png, gt) = scene_png(6, 8);
    let (ct, body) = multipart(&[("pred", &png), ("gt", &gt)]);
    let req = Request::post("/v1/evaluate?id=42")
        .header("content-type", ct)
        .body(Body::from(body))
        .unwrap();
    let (status, body) = send(req, DEFAULT_BODY_LIMIT).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let report: EvalReport = serde_json::from_slice(&body).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.rows[0].id, "42");
    assert_eq!(report.rows[0].iss, Some(1.0));
    assert_eq!(report.rows[0].expected_logs, 6);

    let (ct, body) = multipart(&[("pred", &png)]);
    let req = Request::post("/v1/evaluate")
        .header("content-type", ct)
        .body(Body::from(body))
        .unwrap();
    assert_eq!(
        send(req, DEFAULT_BODY_LIMIT).await.0,
        StatusCode::BAD_REQUEST
    );

    let (ct, body) = multipart(&[("pred", b"junk"), ("gt", &gt)]);
    let req = Request::post("/v1/evaluate")
        .header("content-type", ct)
        .body(Body::from(body))
        .unwrap();
    assert_eq!(
        send(req, DEFAULT_BODY_LIMIT).await.0,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn panics_become_500() {
    let resp = server::run_blocking(|| panic!("boom")).await;
    assert_eq!(resp.status(), StatusCode::INTERNAL_SERVER_ERROR);
    let ok = server::run_blocking(|| StatusCode::NO_CONTENT.into_response()).await;
    assert_eq!(ok.status(), StatusCode::NO_CONTENT);
}

#[tokio::test]
async fn responses_do_not_depend_on_request_order() {
    let inputs: Vec<Vec<u8>> = (0..6).map(|k| scene_png(2 + k, k as u64).0).collect();
    let app = router(DEFAULT_BODY_LIMIT);
    let mut forward = Vec::new();
    for png in &inputs {
        let resp = app
            .clone()
            .oneshot(post("/v1/count", png.clone()))
            .await
            .unwrap();
        forward.push(resp.into_body().collect().await.unwrap().to_bytes());
    }
    let handles: Vec<_> = inputs
        .iter()
        .rev()
        .map(|png| {
            let app = app.clone();
            let png = png.clone();
            tokio::spawn(async move {
                let resp = app.oneshot(post("/v1/count", png)).await.unwrap();
                resp.into_body().collect().await.unwrap().to_bytes()
            })
        })
        .collect();
    let mut backward = Vec::new();
    for h in handles {
        backward.push(h.await.unwrap());
    }
    backward.reverse();
    assert_eq!(forward, backward);
}

#[test]
fn serves_over_real_socket() {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let listener = rt
        .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
        .unwrap();
    let addr = listener.local_addr().unwrap();
    rt.spawn(async move { axum::serve(listener, router(DEFAULT_BODY_LIMIT)).await });

    let mut stream = std::net::TcpStream::connect(addr).unwrap();
    stream
        .write_all(b"GET /healthz HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")
        .unwrap();
    let mut text = String::new();
    stream.read_to_string(&mut text).unwrap();
    assert!(text.starts_with("HTTP/1.1 200"), "{text}");
    assert!(text.contains("{\"status\":\"ok\"}"));
}
