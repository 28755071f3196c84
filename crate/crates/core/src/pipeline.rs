//! End-to-end counting and batch evaluation.
//!
//! Counting runs decode → binarize → optional erosion → label → area filter
//! → count → optional overlay. Evaluation pairs prediction and ground-truth
//! files by filename stem and reports pixel metrics and counting tallies per
//! image, with CSV and JSON renderings.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::components::{self, ComponentStats, Connectivity};
use crate::error::{Error, Result};
use crate::hough::{self, Circle, HoughParams};
use crate::metrics::{self, CountTally, MatchParams};
use crate::morphology::{self, Centroid, StructuringElement};
use crate::raster::{self, BinarizePolicy, BinaryMask, Image, LabelMap, Raster, RgbImage};
use crate::synthgen::{SceneManifest, SynthScene, SynthSpec};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Counter {
    #[default]
    ConnectedComponents,
    Hough,
    ReconstructionCentroids,
}

/// Optional erosion applied to the binarized mask before labeling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PostErosion {
    #[default]
    None,
    Iterated {
        se: StructuringElement,
        iterations: usize,
    },
    Dynamic {
        radius: f64,
    },
}

impl PostErosion {
    fn apply(&self, mask: BinaryMask) -> Result<BinaryMask> {
        match *self {
            PostErosion::None => Ok(mask),
            PostErosion::Iterated { se, iterations } => {
                Ok(morphology::erode(&mask, se, iterations))
            }
            PostErosion::Dynamic { radius } => morphology::dynamic_erode(&mask, radius),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub binarize_policy: BinarizePolicy,
    pub post_erosion: PostErosion,
    pub connectivity: Connectivity,
    pub min_area: usize,
    pub counter: Counter,
    pub hough: HoughParams,
    /// Depth of the h-maxima used by the centroid counter.
    pub h_maxima: f64,
    /// Output switches below are not echoed in reports.
    #[serde(skip)]
    pub overlay: bool,
    /// Stage timings make reports non-reproducible, so they are opt-in.
    #[serde(skip)]
    pub record_timings: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            binarize_policy: BinarizePolicy::default(),
            post_erosion: PostErosion::None,
            connectivity: Connectivity::Eight,
            min_area: 0,
            counter: Counter::ConnectedComponents,
            hough: HoughParams::default(),
            h_maxima: 2.0,
            overlay: false,
            record_timings: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.binarize_policy.validate()?;
        if let PostErosion::Dynamic { radius } = self.post_erosion {
            if radius.is_nan() || radius < 0.0 {
                return Err(Error::invalid(format!(
                    "erosion radius must be >= 0, got {radius}"
                )));
            }
        }
        if self.counter == Counter::Hough {
            self.hough.validate()?;
        }
        if !(self.h_maxima > 0.0) {
            return Err(Error::invalid("h_maxima must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detections {
    Components(Vec<ComponentStats>),
    Circles(Vec<Circle>),
    Centroids(Vec<Centroid>),
}

impl Detections {
    pub fn len(&self) -> usize {
        match self {
            Detections::Components(v) => v.len(),
            Detections::Circles(v) => v.len(),
            Detections::Centroids(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub source: String,
    pub count: usize,
    pub detections: Detections,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<BTreeMap<String, f64>>,
    pub config: PipelineConfig,
}

impl CountReport {
    /// Canonical JSON rendering shared by every front end.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// A counting run: the report plus the intermediate labels and overlay.
#[derive(Debug, Clone)]
pub struct CountRun {
    pub report: CountReport,
    pub labels: LabelMap,
    pub overlay: Option<RgbImage>,
}

struct Stopwatch {
    enabled: bool,
    last: Instant,
    stages: BTreeMap<String, f64>,
}

impl Stopwatch {
    fn new(enabled: bool) -> Self {
        Self {
            enabled,
            last: Instant::now(),
            stages: BTreeMap::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        if self.enabled {
            let now = Instant::now();
            let ms = now.duration_since(self.last).as_secs_f64() * 1e3;
            self.stages.insert(stage.to_owned(), ms);
            self.last = now;
        }
    }

    fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.enabled.then_some(self.stages)
    }
}

fn mask_of(raster: &Raster, policy: &BinarizePolicy) -> Result<BinaryMask> {
    match raster {
        Raster::Image(img) => raster::binarize(img, policy),
        Raster::Labels(l) => Ok(l.to_mask()),
    }
}

fn base_image(raster: &Raster) -> Image {
    match raster {
        Raster::Image(img) => img.clone(),
        Raster::Labels(l) => Image::Gray(l.to_mask().render()),
    }
}

/// Labels a binarized mask with the configured erosion and area filter.
pub fn label_mask(mask: BinaryMask, cfg: &PipelineConfig) -> Result<LabelMap> {
    let eroded = cfg.post_erosion.apply(mask)?;
    let labels = components::label(&eroded, cfg.connectivity);
    Ok(components::filter_components(&labels, cfg.min_area))
}

pub fn count_raster(raster: &Raster, source: &str, cfg: &PipelineConfig) -> Result<CountRun> {
    cfg.validate()?;
    let mut clock = Stopwatch::new(cfg.record_timings);
    let mask = mask_of(raster, &cfg.binarize_policy)?;
    clock.lap("binarize");
    let mask = cfg.post_erosion.apply(mask)?;
    clock.lap("morphology");
    let labels = components::label(&mask, cfg.connectivity);
    clock.lap("label");
    let labels = components::filter_components(&labels, cfg.min_area);
    clock.lap("filter");
    let detections = match cfg.counter {
        Counter::ConnectedComponents => Detections::Components(components::stats(&labels)),
        Counter::Hough => {
            Detections::Circles(hough::detect_circles(&labels.to_mask(), &cfg.hough)?)
        }
        Counter::ReconstructionCentroids => {
            let field = morphology::edt(&labels.to_mask());
            Detections::Centroids(morphology::h_maxima_centroids(
                &field,
                cfg.h_maxima,
                cfg.connectivity,
            )?)
        }
    };
    clock.lap("count");
    let overlay = if cfg.overlay {
        let img = render_overlay(&base_image(raster), &labels)?;
        clock.lap("overlay");
        Some(img)
    } else {
        None
    };
    let report = CountReport {
        source: source.to_owned(),
        count: detections.len(),
        detections,
        timing_ms: clock.finish(),
        config: cfg.clone(),
    };
    Ok(CountRun {
        report,
        labels,
        overlay,
    })
}

pub fn run_count_bytes(bytes: &[u8], source: &str, cfg: &PipelineConfig) -> Result<CountRun> {
    let start = Instant::now();
    let raster = raster::decode(bytes)?;
    let mut run = count_raster(&raster, source, cfg)?;
    if let Some(t) = run.report.timing_ms.as_mut() {
        let total: f64 = t.values().sum();
        t.insert("decode".into(), start.elapsed().as_secs_f64() * 1e3 - total);
    }
    Ok(run)
}

/// Source id is the file stem.
pub fn run_count(path: impl AsRef<Path>, cfg: &PipelineConfig) -> Result<CountRun> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    run_count_bytes(&bytes, &file_stem(path), cfg)
}

/// Overlay path next to the input: `dir/name.overlay.png`.
pub fn overlay_path(input: &Path) -> PathBuf {
    input.with_file_name(format!("{}.overlay.png", file_stem(input)))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Deterministic, well-spread color per label.
pub fn palette(label: u32) -> [u8; 3] {
    let hue = (label as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let x = 1.0 - (hue % 2.0 - 1.0).abs();
    let (r, g, b) = match hue as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let scale = |v: f64| (v * 215.0 + 40.0).round() as u8;
    [scale(r), scale(g), scale(b)]
}

/// 3x5 glyphs for '0'..='9', one row per entry, MSB on the left.
const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

pub const ANNOTATION_COLOR: [u8; 3] = [255, 255, 255];

/// Tints each component half-way toward its palette color and writes its
/// index at the centroid. Background pixels are left untouched.
pub fn render_overlay(base: &Image, labels: &LabelMap) -> Result<RgbImage> {
    if base.width() != labels.width() || base.height() != labels.height() {
        return Err(Error::invalid(format!(
            "overlay base is {}x{} but labels are {}x{}",
            base.width(),
            base.height(),
            labels.width(),
            labels.height()
        )));
    }
    let mut out = base.to_rgb();
    let w = labels.width();
    for (i, &l) in labels.as_slice().iter().enumerate() {
        if l == 0 {
            continue;
        }
        let (r, c) = (i / w, i % w);
        let p = out.get(r, c);
        let t = palette(l);
        let mix = |a: u8, b: u8| ((a as u16 + b as u16) / 2) as u8;
        out.set(r, c, [mix(p[0], t[0]), mix(p[1], t[1]), mix(p[2], t[2])]);
    }
    for s in components::stats(labels) {
        let text = s.label.to_string();
        let text_w = text.len() as isize * 4 - 1;
        let top = s.centroid[0].round() as isize - 2;
        let left = s.centroid[1].round() as isize - text_w / 2;
        for (k, ch) in text.bytes().enumerate() {
            let glyph = DIGITS[(ch - b'0') as usize];
            for (gr, bits) in glyph.iter().enumerate() {
                for gc in 0..3 {
                    if bits & (0b100 >> gc) == 0 {
                        continue;
                    }
                    let (rr, cc) = (top + gr as isize, left + k as isize * 4 + gc);
                    if rr < 0 || cc < 0 || rr as usize >= labels.height() || cc as usize >= w {
                        continue;
                    }
                    if labels.get(rr as usize, cc as usize) == s.label {
                        out.set(rr as usize, cc as usize, ANNOTATION_COLOR);
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub id: String,
    pub accuracy: f64,
    pub f1: f64,
    pub kappa: f64,
    pub iou: f64,
    pub expected_logs: u32,
    pub output: u32,
    pub ci: u32,
    pub e: u32,
    pub i: u32,
    pub n: u32,
    pub iss: Option<f64>,
    pub accuracy_logs: Option<f64>,
}

impl EvalRow {
    pub fn tally(&self) -> CountTally {
        CountTally {
            ci: self.ci,
            e: self.e,
            i: self.i,
            n: self.n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub images: usize,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
    pub kappa: Option<f64>,
    pub iou: Option<f64>,
    pub expected_logs: Option<f64>,
    pub output: Option<f64>,
    pub ci: Option<f64>,
    pub e: Option<f64>,
    pub i: Option<f64>,
    pub n: Option<f64>,
    pub iss: Option<f64>,
    pub accuracy_logs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalError {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub aggregate: Aggregate,
    pub errors: Vec<EvalError>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl Aggregate {
    pub fn of(rows: &[EvalRow]) -> Self {
        let m = |f: fn(&EvalRow) -> f64| mean(rows.iter().map(f));
        Self {
            images: rows.len(),
            accuracy: m(|r| r.accuracy),
            f1: m(|r| r.f1),
            kappa: m(|r| r.kappa),
            iou: m(|r| r.iou),
            expected_logs: m(|r| r.expected_logs as f64),
            output: m(|r| r.output as f64),
            ci: m(|r| r.ci as f64),
            e: m(|r| r.e as f64),
            i: m(|r| r.i as f64),
            n: m(|r| r.n as f64),
            iss: mean(rows.iter().filter_map(|r| r.iss)),
            accuracy_logs: mean(rows.iter().filter_map(|r| r.accuracy_logs)),
        }
    }
}

/// Numeric ids sort numerically, everything else lexically after them.
pub fn compare_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

pub const CSV_HEADERS: [&str; 13] = [
    "Image Index",
    "Accuracy_pixel",
    "F1 Score",
    "Kappa",
    "IoU",
    "Expected Number of Logs",
    "Output",
    "Correctly Identified (CI)",
    "Non-identified (E)",
    "Intersecting Logs (I)",
    "Noise (N)",
    "ISS",
    "Accuracy_logs",
];

impl EvalReport {
    pub fn new(mut rows: Vec<EvalRow>, mut errors: Vec<EvalError>) -> Self {
        rows.sort_by(|a, b| compare_ids(&a.id, &b.id));
        errors.sort_by(|a, b| compare_ids(&a.id, &b.id));
        Self {
            aggregate: Aggregate::of(&rows),
            rows,
            errors,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        rows_to_csv(&self.rows)
    }
}

pub fn rows_to_csv(rows: &[EvalRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| Error::Encode(e.to_string());
    w.write_record(CSV_HEADERS).map_err(enc)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.id.clone(),
            r.accuracy.to_string(),
            r.f1.to_string(),
            r.kappa.to_string(),
            r.iou.to_string(),
            r.expected_logs.to_string(),
            r.output.to_string(),
            r.ci.to_string(),
            r.e.to_string(),
            r.i.to_string(),
            r.n.to_string(),
            opt(r.iss),
            opt(r.accuracy_logs),
        ])
        .map_err(enc)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Encode(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Encode(e.to_string()))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<EvalRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let bad = |m: String| Error::invalid(format!("malformed evaluation csv: {m}"));
    let headers = rd.headers().map_err(|e| bad(e.to_string()))?;
    if headers.iter().ne(CSV_HEADERS) {
        return Err(bad("unexpected header".into()));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != CSV_HEADERS.len() {
            return Err(bad(format!("expected {} fields", CSV_HEADERS.len())));
        }
        let f = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|e| bad(format!("{}: {e}", CSV_HEADERS[i])))
        };
        let u = |i: usize| {
            rec[i]
                .parse::<u32>()
                .map_err(|e| bad(format!("{}: {e}", CSV_HEADERS[i])))
        };
        let o = |i: usize| -> Result<Option<f64>> {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                f(i).map(Some)
            }
        };
        rows.push(EvalRow {
            id: rec[0].to_owned(),
            accuracy: f(1)?,
            f1: f(2)?,
            kappa: f(3)?,
            iou: f(4)?,
            expected_logs: u(5)?,
            output: u(6)?,
            ci: u(7)?,
            e: u(8)?,
            i: u(9)?,
            n: u(10)?,
            iss: o(11)?,
            accuracy_logs: o(12)?,
        });
    }
    Ok(rows)
}

/// Scores one prediction against one instance ground truth.
///
/// A 16-bit prediction is taken as instance labels as-is; anything else is
/// binarized and labeled with `cfg`.
pub fn eval_rasters(
    id: &str,
    pred: &Raster,
    gt: &LabelMap,
    params: &MatchParams,
    cfg: &PipelineConfig,
) -> Result<EvalRow> {
    cfg.validate()?;
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::invalid(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    let (pred_mask, pred_labels) = match pred {
        Raster::Labels(l) => (l.to_mask(), components::filter_components(l, cfg.min_area)),
        Raster::Image(img) => {
            let mask = raster::binarize(img, &cfg.binarize_policy)?;
            let labels = label_mask(mask.clone(), cfg)?;
            (mask, labels)
        }
    };
    let scores = metrics::pixel_scores(&metrics::confusion(&pred_mask, &gt.to_mask())?)?;
    let matched = metrics::match_instances(&pred_labels, gt, params)?;
    let t = matched.tally;
    Ok(EvalRow {
        id: id.to_owned(),
        accuracy: scores.accuracy,
        f1: scores.f1,
        kappa: scores.kappa,
        iou: scores.iou,
        expected_logs: gt.component_count(),
        output: pred_labels.component_count(),
        ci: t.ci,
        e: t.e,
        i: t.i,
        n: t.n,
        iss: metrics::iss(&t).ok(),
        accuracy_logs: metrics::accuracy_logs(&t).ok(),
    })
}

pub fn eval_bytes(
    id: &str,
    pred: &[u8],
    gt: &[u8],
    params: &MatchParams,
    cfg: &PipelineConfig,
) -> Result<EvalRow> {
    let pred = raster::decode(pred)?;
    let gt = raster::decode_labels(gt)?;
    eval_rasters(id, &pred, &gt, params, cfg)
}

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "pgm", "ppm", "pnm"];

fn images_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BTreeMap::new();
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    for p in paths {
        let name = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        if name.ends_with(".overlay.png") {
            continue;
        }
        let ext = p
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        if IMAGE_EXTENSIONS.contains(&ext.as_str()) {
            out.entry(file_stem(&p)).or_insert(p);
        }
    }
    Ok(out)
}

fn eval_files(
    id: &str,
    pred: &Path,
    gt: &Path,
    params: &MatchParams,
    cfg: &PipelineConfig,
) -> Result<EvalRow> {
    let p = std::fs::read(pred).map_err(|e| Error::io(pred, e))?;
    let g = std::fs::read(gt).map_err(|e| Error::io(gt, e))?;
    eval_bytes(id, &p, &g, params, cfg)
}

/// Evaluates every stem present in both directories on `jobs` workers.
/// Unpaired stems and per-image failures are reported, not fatal.
pub fn run_eval(
    pred_dir: impl AsRef<Path>,
    gt_dir: impl AsRef<Path>,
    params: &MatchParams,
    cfg: &PipelineConfig,
    jobs: usize,
) -> Result<EvalReport> {
    params.validate()?;
    cfg.validate()?;
    let preds = images_by_stem(pred_dir.as_ref())?;
    let gts = images_by_stem(gt_dir.as_ref())?;
    let stems: BTreeSet<&String> = preds.keys().chain(gts.keys()).collect();

    let mut errors = Vec::new();
    let mut pairs = Vec::new();
    for stem in stems {
        match (preds.get(stem), gts.get(stem)) {
            (Some(p), Some(g)) => pairs.push((stem.clone(), p, g)),
            (Some(_), None) => errors.push(EvalError {
                id: stem.clone(),
                error: "no ground truth with this stem".into(),
            }),
            (None, Some(_)) => errors.push(EvalError {
                id: stem.clone(),
                error: "no prediction with this stem".into(),
            }),
            (None, None) => unreachable!(),
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(String, Result<EvalRow>)> = pool.install(|| {
        pairs
            .par_iter()
            .map(|(id, p, g)| (id.clone(), eval_files(id, p, g, params, cfg)))
            .collect()
    });

    let mut rows = Vec::new();
    for (id, res) in results {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => errors.push(EvalError {
                id,
                error: e.to_string(),
            }),
        }
    }
    Ok(EvalReport::new(rows, errors))
}

/// On-disk description of an exported synthetic scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub id: String,
    pub spec: SynthSpec,
    #[serde(flatten)]
    pub manifest: SceneManifest,
    pub expected: CountTally,
}

/// Writes `pred/<id>.png` (flat red), `gt/<id>.png` (16-bit labels) and
/// `manifest/<id>.json` under `dir`.
pub fn export_scene(
    dir: impl AsRef<Path>,
    id: &str,
    scene: &SynthScene,
    pred: &LabelMap,
    expected: CountTally,
) -> Result<()> {
    let dir = dir.as_ref();
    for sub in ["pred", "gt", "manifest"] {
        let d = dir.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let red = morphology::make_ground_truth(pred, morphology::GroundTruthMode::FlatRed)?;
    raster::save_image(&red, dir.join("pred").join(format!("{id}.png")))?;
    raster::save_labels(
        &scene.gt_instances,
        dir.join("gt").join(format!("{id}.png")),
    )?;
    let file = SceneFile {
        id: id.to_owned(),
        spec: scene.spec.clone(),
        manifest: scene.manifest.clone(),
        expected,
    };
    let path = dir.join("manifest").join(format!("{id}.json"));
    let json = serde_json::to_string_pretty(&file).map_err(|e| Error::Encode(e.to_string()))?;
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

/// Equivalent radius of a detected circle's disc, used when volumes are
/// computed from Hough output.
pub fn circle_stats(circles: &[Circle]) -> Vec<ComponentStats> {
    circles
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let r = c.radius as f64;
            ComponentStats {
                label: k as u32 + 1,
                area: (PI * r * r).round() as usize,
                centroid: [c.center[0] as f64, c.center[1] as f64],
                bbox: [
                    c.center[0].saturating_sub(c.radius),
                    c.center[1].saturating_sub(c.radius),
                    c.center[0] + c.radius,
                    c.center[1] + c.radius,
                ],
                equivalent_radius: r,
            }
        })
        .collect()
}
