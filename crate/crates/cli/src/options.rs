use clap::{Args, Parser, ValueEnum};

use logtally_core::pipeline::PostErosion;
use logtally_core::raster::BinarizeMode;
use logtally_core::{
    BinarizePolicy, Connectivity, Counter, HoughParams, MatchParams, PipelineConfig,
    StructuringElement,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CounterArg {
    Cc,
    Hough,
    Centroids,
}

impl From<CounterArg> for Counter {
    fn from(c: CounterArg) -> Self {
        match c {
            CounterArg::Cc => Counter::ConnectedComponents,
            CounterArg::Hough => Counter::Hough,
            CounterArg::Centroids => Counter::ReconstructionCentroids,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BinarizeArg {
    /// Red channel above threshold and strictly above green and blue.
    Red,
    Luma,
    R,
    G,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeArg {
    Square3,
    Cross3,
}

impl From<SeArg> for StructuringElement {
    fn from(s: SeArg) -> Self {
        match s {
            SeArg::Square3 => StructuringElement::Square3,
            SeArg::Cross3 => StructuringElement::Cross3,
        }
    }
}

fn parse_connectivity(s: &str) -> Result<Connectivity, String> {
    match s {
        "4" => Ok(Connectivity::Four),
        "8" => Ok(Connectivity::Eight),
        _ => Err(format!("connectivity must be 4 or 8, got {s:?}")),
    }
}

/// How a prediction image becomes labeled instances.
#[derive(Debug, Clone, Args)]
pub struct MaskOptions {
    #[arg(long, value_enum, default_value_t = BinarizeArg::Red)]
    pub binarize: BinarizeArg,
    #[arg(long, default_value_t = 127)]
    pub threshold: u8,
    /// Drop components smaller than this many pixels (0 keeps all).
    #[arg(long, default_value_t = 0)]
    pub min_area: usize,
    #[arg(long, default_value = "8", value_parser = parse_connectivity)]
    pub connectivity: Connectivity,
    /// Erode the mask this many times before labeling.
    #[arg(long, conflicts_with = "erode_radius")]
    pub erode_iters: Option<usize>,
    #[arg(long, value_enum, default_value_t = SeArg::Square3)]
    pub se: SeArg,
    /// Keep only pixels farther than this from the background.
    #[arg(long)]
    pub erode_radius: Option<f64>,
}

impl MaskOptions {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        let mode = match self.binarize {
            BinarizeArg::Red => BinarizeMode::RedDominant,
            BinarizeArg::Luma => BinarizeMode::Luma,
            BinarizeArg::R => BinarizeMode::Channel(0),
            BinarizeArg::G => BinarizeMode::Channel(1),
            BinarizeArg::B => BinarizeMode::Channel(2),
        };
        cfg.binarize_policy = BinarizePolicy {
            mode,
            threshold: self.threshold,
        };
        cfg.min_area = self.min_area;
        cfg.connectivity = self.connectivity;
        cfg.post_erosion = match (self.erode_iters, self.erode_radius) {
            (Some(iterations), _) => PostErosion::Iterated {
                se: self.se.into(),
                iterations,
            },
            (None, Some(radius)) => PostErosion::Dynamic { radius },
            (None, None) => PostErosion::None,
        };
    }
}

#[derive(Debug, Clone, Args)]
pub struct HoughOptions {
    #[arg(long, default_value_t = 5)]
    pub rmin: usize,
    #[arg(long, default_value_t = 60)]
    pub rmax: usize,
    /// Minimum accepted votes as a fraction of the circumference.
    #[arg(long, default_value_t = 0.4)]
    pub vote_threshold: f64,
    /// Minimum center distance between detections (defaults to --rmin).
    #[arg(long)]
    pub nms: Option<f64>,
}

impl HoughOptions {
    pub fn params(&self) -> HoughParams {
        let mut p = HoughParams::with_radii(self.rmin, self.rmax);
        p.vote_threshold = self.vote_threshold;
        if let Some(d) = self.nms {
            p.nms_min_center_dist = d;
        }
        p
    }
}

#[derive(Debug, Clone, Args)]
pub struct CountOptions {
    #[command(flatten)]
    pub mask: MaskOptions,
    #[arg(long, value_enum, default_value_t = CounterArg::Cc)]
    pub counter: CounterArg,
    #[command(flatten)]
    pub hough: HoughOptions,
    /// Depth of the distance maxima used by the centroid counter.
    #[arg(long = "h-maxima", default_value_t = 2.0)]
    pub h_maxima: f64,
    /// Include per-stage timings in the report.
    #[arg(long)]
    pub timings: bool,
}

impl CountOptions {
    pub fn config(&self) -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        self.mask.apply(&mut cfg);
        cfg.counter = self.counter.into();
        cfg.hough = self.hough.params();
        cfg.h_maxima = self.h_maxima;
        cfg.record_timings = self.timings;
        cfg
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalOptions {
    #[command(flatten)]
    pub mask: MaskOptions,
    /// Fraction of a ground-truth log a prediction must cover to claim it.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
}

impl EvalOptions {
    pub fn config(&self) -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        self.mask.apply(&mut cfg);
        cfg
    }

    pub fn match_params(&self) -> MatchParams {
        MatchParams {
            coverage_tau: self.tau,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "count-query", no_binary_name = true, disable_help_flag = true)]
pub struct CountQuery {
    #[command(flatten)]
    pub options: CountOptions,
    #[arg(long)]
    pub source: Option<String>,
}

#[derive(Debug, Parser)]
#[command(
    name = "evaluate-query",
    no_binary_name = true,
    disable_help_flag = true
)]
pub struct EvalQuery {
    #[command(flatten)]
    pub options: EvalOptions,
    #[arg(long)]
    pub id: Option<String>,
}

const SWITCHES: [&str; 1] = ["timings"];

/// Turns query pairs into flags so HTTP requests go through the exact CLI
/// parser. `min_area=5` becomes `--min-area 5`; switches take true/false.
pub fn query_to_args(pairs: &[(String, String)]) -> Result<Vec<String>, String> {
    let mut args = Vec::new();
    for (key, value) in pairs {
        let flag = key.replace('_', "-");
        if flag.is_empty() || flag.starts_with('-') {
            return Err(format!("invalid query parameter {key:?}"));
        }
        if SWITCHES.contains(&flag.as_str()) {
            match value.as_str() {
                "" | "true" | "1" => args.push(format!("--{flag}")),
                "false" | "0" => {}
                _ => return Err(format!("{key} expects true or false, got {value:?}")),
            }
        } else {
            args.push(format!("--{flag}={value}"));
        }
    }
    Ok(args)
}

pub fn parse_query<P: Parser>(pairs: &[(String, String)]) -> Result<P, String> {
    let args = query_to_args(pairs)?;
    P::try_parse_from(args).map_err(|e| {
        let text = e.render().to_string();
        text.lines()
            .next()
            .unwrap_or("invalid query")
            .trim_start_matches("error: ")
            .to_owned()
    })
}
