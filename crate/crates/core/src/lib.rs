//! logtally-core: counting wood-log faces in segmentation masks.
//!
//! The crate covers everything downstream of a segmentation network:
//!
//! 1. **raster** – grid types, binarization, PNG/PGM/PPM I/O.
//! 2. **morphology** – erosion/dilation, exact EDT, dynamic erosion,
//!    grayscale reconstruction, h-maxima centroids, ground-truth renderings.
//! 3. **components** – two-pass union-find labeling, area filtering, stats.
//! 4. **hough** – circular Hough transform and the fixed-radius variant.
//! 5. **metrics** – pixel metrics, instance matching, the
//!    intersection-sensitive score.
//! 6. **volume** – per-log cylinder volume and pile totals.
//! 7. **synthgen** – seeded synthetic piles with known tallies.
//! 8. **pipeline** – end-to-end counting and batch evaluation reports.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod components;
pub mod error;
pub mod hough;
pub mod metrics;
pub mod morphology;
pub mod pipeline;
pub mod raster;
pub mod synthgen;
pub mod volume;

pub use components::{ComponentStats, Connectivity};
pub use error::{Error, Result};
pub use hough::{Circle, HoughParams};
pub use metrics::{ConfusionCounts, CountTally, MatchParams, PixelScores};
pub use morphology::{DistanceField, GroundTruthMode, StructuringElement};
pub use pipeline::{CountReport, Counter, EvalReport, PipelineConfig};
pub use raster::{BinarizePolicy, BinaryMask, GrayImage, Image, LabelMap, RgbImage};
pub use synthgen::{PerturbSpec, SynthScene, SynthSpec};
pub use volume::{LogDims, PileVolume, ScaleCalibration};
