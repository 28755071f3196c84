use logtally_core::morphology::make_ground_truth;
use logtally_core::pipeline::{self, Counter, EvalReport};
use logtally_core::volume::{dims_from_components, pile_volume};
use logtally_core::{
    components, raster, synthgen, GroundTruthMode, MatchParams, PerturbSpec, PipelineConfig,
    ScaleCalibration, SynthSpec,
};

fn scene(n: usize, seed: u64) -> synthgen::SynthScene {
    synthgen::generate(&SynthSpec {
        n_logs: n,
        seed,
        radius_range: (10.0, 18.0),
        min_gap: 12,
        ..SynthSpec::default()
    })
    .unwrap()
}

#[test]
fn every_counter_agrees_on_separated_discs() {
    for seed in 0..5 {
        let s = scene(6, seed);
        let red = make_ground_truth(&s.gt_instances, GroundTruthMode::FlatRed).unwrap();
        let png = raster::encode_png(&red).unwrap();
        for counter in [
            Counter::ConnectedComponents,
            Counter::Hough,
            Counter::ReconstructionCentroids,
        ] {
            let cfg = PipelineConfig {
                counter,
                ..PipelineConfig::default()
            };
            let run = pipeline::run_count_bytes(&png, "s", &cfg).unwrap();
            assert_eq!(run.report.count, 6, "seed {seed} {counter:?}");
        }
    }
}

#[test]
fn exported_scenes_evaluate_to_their_manifest_tallies() {
    let dir = tempfile::tempdir().unwrap();
    let mut expected = Vec::new();
    for k in 0..4u64 {
        let s = scene(8, 100 + k);
        let pairs = synthgen::nearest_neighbors(&s);
        let spec = PerturbSpec {
            merge_pairs: pairs.iter().take(k as usize % 2).copied().collect(),
            drop_labels: vec![8],
            extra_noise: k as usize,
            seed: k,
        };
        let Ok((pred, tally)) = synthgen::perturb(&s, &spec) else {
            continue;
        };
        let id = (k + 1).to_string();
        pipeline::export_scene(dir.path(), &id, &s, &pred, tally).unwrap();
        expected.push((id, tally));
    }
    assert!(expected.len() >= 3);

    let report: EvalReport = pipeline::run_eval(
        dir.path().join("pred"),
        dir.path().join("gt"),
        &MatchParams::default(),
        &PipelineConfig::default(),
        2,
    )
    .unwrap();
    assert!(report.errors.is_empty(), "{:?}", report.errors);
    assert_eq!(report.rows.len(), expected.len());
    for (row, (id, tally)) in report.rows.iter().zip(&expected) {
        assert_eq!(&row.id, id);
        assert_eq!(row.tally(), *tally, "scene {id}");
    }
}

#[test]
fn pile_volume_is_area_times_depth() {
    // π r_eq² equals the pixel area, so each log is area / ppm² · depth.
    let s = scene(5, 7);
    let stats = components::stats(&s.gt_instances);
    let (ppm, depth) = (250.0, 2.5);
    let dims = dims_from_components(&stats, &ScaleCalibration::new(ppm).unwrap(), depth).unwrap();
    let pile = pile_volume(&dims).unwrap();
    let area: usize = stats.iter().map(|c| c.area).sum();
    let want = area as f64 / (ppm * ppm) * depth;
    assert_eq!(pile.log_count, 5);
    assert!((pile.total - want).abs() < 1e-12 * want.max(1.0));
}

#[test]
fn label_png_roundtrip_preserves_instances() {
    let s = scene(9, 3);
    let bytes = raster::encode_labels_png(&s.gt_instances).unwrap();
    assert_eq!(raster::decode_labels(&bytes).unwrap(), s.gt_instances);
}
