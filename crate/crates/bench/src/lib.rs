//! Fixed inputs shared by the benchmarks.

use logtally_core::{synthgen, BinaryMask, SynthSpec};

/// A 256x256 scene with `n` well-separated discs.
pub fn scene_mask(n: usize, seed: u64) -> BinaryMask {
    let spec = SynthSpec {
        width: 256,
        height: 256,
        n_logs: n,
        seed,
        ..SynthSpec::default()
    };
    synthgen::generate(&spec).expect("bench scene").gt_mask
}
