use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use logtally_core::morphology::{self, GroundTruthMode};
use logtally_core::pipeline::{self, Detections};
use logtally_core::raster::{self, Raster};
use logtally_core::synthgen::{self, PerturbSpec, SynthSpec};
use logtally_core::volume::{self, ScaleCalibration};
use logtally_core::{components, hough, CountReport, Image, LabelMap};

use crate::options::{CountOptions, EvalOptions, HoughOptions, MaskOptions};
use crate::server;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliExit {
    Success = 0,
    Runtime = 1,
    Usage = 2,
    PartialEval = 3,
}

impl From<CliExit> for ExitCode {
    fn from(e: CliExit) -> Self {
        ExitCode::from(e as u8)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "logtally",
    version,
    about = "Count logs in segmentation masks of timber piles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count logs in one mask image and print the report as JSON.
    Count {
        image: PathBuf,
        #[command(flatten)]
        options: CountOptions,
        /// Write an annotated overlay (default: next to the input).
        #[arg(long, num_args = 0..=1, value_name = "OUT")]
        overlay: Option<Option<PathBuf>>,
        /// Write the report here instead of stdout.
        #[arg(long, value_name = "OUT")]
        json: Option<PathBuf>,
        /// Report source id (default: file stem).
        #[arg(long)]
        source: Option<String>,
    },
    /// Score predictions against instance ground truths paired by file stem.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[command(flatten)]
        options: EvalOptions,
        #[arg(long, value_name = "OUT")]
        csv: Option<PathBuf>,
        /// Write the JSON report here instead of stdout.
        #[arg(long, value_name = "OUT")]
        json: Option<PathBuf>,
        /// Worker threads (default: logical processors).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Render ground-truth variants or erode every image in a directory.
    Preprocess {
        #[arg(long, value_enum)]
        mode: PreprocessMode,
        /// Erosion iterations for `--mode erode` (element from --se).
        #[arg(long, default_value_t = 15)]
        iters: usize,
        /// Gradient cap for red-gradient, in pixels.
        #[arg(long, required_if_eq("mode", "red-gradient"))]
        max_diameter: Option<f64>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        mask: MaskOptions,
    },
    /// Detect circles with the Hough transform.
    Hough {
        image: PathBuf,
        #[command(flatten)]
        params: HoughOptions,
        /// Single-radius detection on a gray-gradient rendering.
        #[arg(long)]
        fixed_radius: Option<usize>,
        #[command(flatten)]
        mask: MaskOptions,
    },
    /// Estimate pile volume from a count report.
    Volume {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        px_per_meter: f64,
        /// Log length in meters.
        #[arg(long)]
        depth: f64,
    },
    /// Generate synthetic scenes with known tallies.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP counting service.
    Serve {
        /// Defaults to $LOGTALLY_PORT, then 8080.
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "0.0.0.0")]
        host: String,
        /// Request body limit in bytes.
        #[arg(long, default_value_t = server::DEFAULT_BODY_LIMIT)]
        body_limit: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PreprocessMode {
    Flat,
    RedGradient,
    GrayGradient,
    Erode,
}

/// A batch of scenes for `synth`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthJob {
    /// Id prefix; scenes are named `<name>-<k>`, or just `<k>` when empty.
    pub name: String,
    pub count: usize,
    pub scene: SynthSpec,
    pub perturb: PerturbSpec,
}

impl Default for SynthJob {
    fn default() -> Self {
        Self {
            name: String::new(),
            count: 1,
            scene: SynthSpec::default(),
            perturb: PerturbSpec::default(),
        }
    }
}

pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    dispatch(argv).into()
}

pub fn dispatch<I, T>(argv: I) -> CliExit
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                CliExit::Usage
            } else {
                CliExit::Success
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            CliExit::Runtime
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cmd: Command) -> anyhow::Result<CliExit> {
    match cmd {
        Command::Count {
            image,
            options,
            overlay,
            json,
            source,
        } => {
            let mut cfg = options.config();
            cfg.overlay = overlay.is_some();
            let bytes = fs::read(&image).with_context(|| format!("reading {}", image.display()))?;
            let stem = image.file_stem().map(|s| s.to_string_lossy().into_owned());
            let source = source.or(stem).unwrap_or_default();
            let run = pipeline::run_count_bytes(&bytes, &source, &cfg)?;
            if let (Some(target), Some(img)) = (overlay, run.overlay.as_ref()) {
                let path = target.unwrap_or_else(|| pipeline::overlay_path(&image));
                raster::save_image(&Image::Rgb(img.clone()), path)?;
            }
            emit(&run.report.to_json(), json.as_deref())?;
            Ok(CliExit::Success)
        }
        Command::Eval {
            pred,
            gt,
            options,
            csv,
            json,
            jobs,
        } => {
            let jobs = jobs.unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1)
            });
            let report =
                pipeline::run_eval(&pred, &gt, &options.match_params(), &options.config(), jobs)?;
            if let Some(path) = csv {
                fs::write(&path, report.to_csv()?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            emit(&report.to_json(), json.as_deref())?;
            for e in &report.errors {
                eprintln!("{}: {}", e.id, e.error);
            }
            Ok(if report.errors.is_empty() {
                CliExit::Success
            } else {
                CliExit::PartialEval
            })
        }
        Command::Preprocess {
            mode,
            iters,
            max_diameter,
            input,
            out,
            mask,
        } => {
            preprocess(mode, iters, max_diameter, &input, &out, &mask)?;
            Ok(CliExit::Success)
        }
        Command::Hough {
            image,
            params,
            fixed_radius,
            mask,
        } => {
            let mut opts = CountOptions {
                mask,
                counter: crate::options::CounterArg::Hough,
                hough: params,
                h_maxima: 2.0,
                timings: false,
            };
            let source = image
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let report = match fixed_radius {
                None => pipeline::run_count(&image, &opts.config())?.report,
                Some(r) => {
                    opts.hough.rmin = opts.hough.rmin.min(r);
                    opts.hough.rmax = opts.hough.rmax.max(r);
                    let cfg = opts.config();
                    let gray = match raster::decode_file(&image)? {
                        Raster::Image(Image::Gray(g)) => g,
                        Raster::Image(Image::Rgb(c)) => raster::to_gray(&c),
                        Raster::Labels(_) => {
                            bail!("fixed-radius detection needs an 8-bit gradient image")
                        }
                    };
                    let circles = hough::detect_centroids_fixed_radius(&gray, r, &cfg.hough)?;
                    CountReport {
                        source,
                        count: circles.len(),
                        detections: Detections::Circles(circles),
                        timing_ms: None,
                        config: cfg,
                    }
                }
            };
            print!("{}", report.to_json());
            Ok(CliExit::Success)
        }
        Command::Volume {
            report,
            px_per_meter,
            depth,
        } => {
            let text = fs::read_to_string(&report)
                .with_context(|| format!("reading {}", report.display()))?;
            let report: CountReport = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", report.display()))?;
            let stats = match &report.detections {
                Detections::Components(s) => s.clone(),
                Detections::Circles(c) => pipeline::circle_stats(c),
                Detections::Centroids(_) => {
                    bail!("centroid reports carry no radii; count with --counter cc or hough")
                }
            };
            let cal = ScaleCalibration::new(px_per_meter)?;
            let dims = volume::dims_from_components(&stats, &cal, depth)?;
            let pile = volume::pile_volume(&dims)?;
            let mut text = serde_json::to_string_pretty(&pile)?;
            text.push('\n');
            print!("{text}");
            Ok(CliExit::Success)
        }
        Command::Synth { spec, out } => {
            let text =
                fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let job: SynthJob = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", spec.display()))?;
            synth(&job, &out)?;
            Ok(CliExit::Success)
        }
        Command::Serve {
            port,
            host,
            body_limit,
        } => {
            let port = match port {
                Some(p) => p,
                None => server::port_from_env()?,
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(server::serve(&host, port, body_limit))?;
            Ok(CliExit::Success)
        }
    }
}

pub fn synth(job: &SynthJob, out: &Path) -> anyhow::Result<()> {
    for k in 0..job.count {
        let id = if job.name.is_empty() {
            (k + 1).to_string()
        } else {
            format!("{}-{}", job.name, k + 1)
        };
        let spec = SynthSpec {
            seed: job.scene.seed.wrapping_add(k as u64),
            ..job.scene.clone()
        };
        let scene = synthgen::generate(&spec).with_context(|| format!("scene {id}"))?;
        let p = PerturbSpec {
            seed: job.perturb.seed.wrapping_add(k as u64),
            ..job.perturb.clone()
        };
        let (pred, tally) = synthgen::perturb(&scene, &p).with_context(|| format!("scene {id}"))?;
        pipeline::export_scene(out, &id, &scene, &pred, tally)?;
    }
    Ok(())
}

fn image_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension().and_then(|e| e.to_str()).is_some_and(|e| {
                    matches!(
                        e.to_ascii_lowercase().as_str(),
                        "png" | "pgm" | "ppm" | "pnm"
                    )
                })
        })
        .collect();
    files.sort();
    Ok(files)
}

fn preprocess(
    mode: PreprocessMode,
    iters: usize,
    max_diameter: Option<f64>,
    input: &Path,
    out: &Path,
    mask: &MaskOptions,
) -> anyhow::Result<()> {
    let mut cfg = logtally_core::PipelineConfig::default();
    mask.apply(&mut cfg);
    let se = mask.se;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for path in image_files(input)? {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let target = out.join(format!("{name}.png"));
        let raster = raster::decode_file(&path)?;
        let instances = |r: &Raster| -> anyhow::Result<LabelMap> {
            Ok(match r {
                Raster::Labels(l) => l.clone(),
                Raster::Image(img) => {
                    pipeline::label_mask(raster::binarize(img, &cfg.binarize_policy)?, &cfg)?
                }
            })
        };
        let gt_mode = match mode {
            PreprocessMode::Flat => GroundTruthMode::FlatRed,
            PreprocessMode::RedGradient => GroundTruthMode::RedGradientCapped {
                max_diameter: max_diameter.unwrap_or_default(),
            },
            PreprocessMode::GrayGradient => GroundTruthMode::GrayGradientFull,
            PreprocessMode::Erode => {
                match &raster {
                    Raster::Labels(l) => raster::save_labels(
                        &morphology::erode_labels(l, se.into(), iters),
                        &target,
                    )?,
                    Raster::Image(img) => {
                        let m = raster::binarize(img, &cfg.binarize_policy)?;
                        let eroded = morphology::erode(&m, se.into(), iters);
                        let labels = components::label(&eroded, cfg.connectivity);
                        let red = morphology::make_ground_truth(&labels, GroundTruthMode::FlatRed)?;
                        raster::save_image(&red, &target)?;
                    }
                }
                continue;
            }
        };
        let img = morphology::make_ground_truth(&instances(&raster)?, gt_mode)?;
        raster::save_image(&img, &target)?;
    }
    Ok(())
}
