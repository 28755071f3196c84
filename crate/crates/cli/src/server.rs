//! Stateless HTTP front end over the counting pipeline.
//!
//! The service counts logs in masks that clients have already segmented; it
//! does not run a segmentation model.

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Query};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde_json::json;

use logtally_core::pipeline::{self, EvalReport};
use logtally_core::Error;

use crate::options::{parse_query, CountQuery, EvalQuery};

pub const DEFAULT_BODY_LIMIT: usize = 32 * 1024 * 1024;
pub const DEFAULT_PORT: u16 = 8080;
pub const PORT_ENV: &str = "LOGTALLY_PORT";

pub fn port_from_env() -> anyhow::Result<u16> {
    match std::env::var(PORT_ENV) {
        Ok(v) => v
            .parse()
            .map_err(|_| anyhow::anyhow!("{PORT_ENV}={v:?} is not a valid port")),
        Err(_) => Ok(DEFAULT_PORT),
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error_response(status: StatusCode, message: impl Into<String>) -> Response {
    let mut body = json!({ "error": message.into() }).to_string();
    body.push('\n');
    json_response(status, body)
}

fn core_error(e: Error) -> Response {
    match e {
        Error::Decode(_) | Error::InvalidInput(_) => {
            error_response(StatusCode::BAD_REQUEST, e.to_string())
        }
        _ => error_response(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

/// Runs `work` off the async threads. A panic inside becomes a 500 and the
/// server keeps serving.
pub async fn run_blocking<F>(work: F) -> Response
where
    F: FnOnce() -> Response + Send + 'static,
{
    match tokio::task::spawn_blocking(work).await {
        Ok(resp) => resp,
        Err(_) => error_response(StatusCode::INTERNAL_SERVER_ERROR, "internal error"),
    }
}

async fn healthz() -> Response {
    json_response(StatusCode::OK, "{\"status\":\"ok\"}\n".into())
}

async fn count(Query(pairs): Query<Vec<(String, String)>>, body: Bytes) -> Response {
    let query: CountQuery = match parse_query(&pairs) {
        Ok(q) => q,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, e),
    };
    run_blocking(move || {
        let cfg = query.options.config();
        let source = query.source.unwrap_or_else(|| "upload".into());
        match pipeline::run_count_bytes(&body, &source, &cfg) {
            Ok(run) => json_response(StatusCode::OK, run.report.to_json()),
            Err(e) => core_error(e),
        }
    })
    .await
}

async fn evaluate(Query(pairs): Query<Vec<(String, String)>>, mut form: Multipart) -> Response {
    let query: EvalQuery = match parse_query(&pairs) {
        Ok(q) => q,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, e),
    };
    let (mut pred, mut gt) = (None, None);
    loop {
        match form.next_field().await {
            Ok(Some(field)) => {
                let name = field.name().unwrap_or_default().to_owned();
                let data = match field.bytes().await {
                    Ok(d) => d,
                    Err(e) => return e.into_response(),
                };
                match name.as_str() {
                    "pred" => pred = Some(data),
                    "gt" => gt = Some(data),
                    other => {
                        return error_response(
                            StatusCode::BAD_REQUEST,
                            format!("unexpected multipart field {other:?}"),
                        )
                    }
                }
            }
            Ok(None) => break,
            Err(e) => return e.into_response(),
        }
    }
    let (Some(pred), Some(gt)) = (pred, gt) else {
        return error_response(
            StatusCode::BAD_REQUEST,
            "multipart fields \"pred\" and \"gt\" are required",
        );
    };
    run_blocking(move || {
        let id = query.id.unwrap_or_else(|| "upload".into());
        let cfg = query.options.config();
        match pipeline::eval_bytes(&id, &pred, &gt, &query.options.match_params(), &cfg) {
            Ok(row) => json_response(
                StatusCode::OK,
                EvalReport::new(vec![row], Vec::new()).to_json(),
            ),
            Err(e) => core_error(e),
        }
    })
    .await
}

pub fn router(body_limit: usize) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/count", post(count))
        .route("/v1/evaluate", post(evaluate))
        .layer(DefaultBodyLimit::max(body_limit))
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

pub async fn serve(host: &str, port: u16, body_limit: usize) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(body_limit))
        .with_graceful_shutdown(shutdown_signal())
        .await?;
    Ok(())
}
