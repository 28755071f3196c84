//! Seeded synthetic log piles with known ground truth.
//!
//! Scenes are disc packings with a guaranteed background valley between
//! logs, so every construction has an exact expected tally. Randomness comes
//! from ChaCha8 streams seeded by the spec, which is platform independent:
//! stream 0 places logs, stream 1 places noise blobs.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::components::{label, Connectivity};
use crate::error::{Error, Result};
use crate::metrics::CountTally;
use crate::raster::{BinaryMask, LabelMap};

const PLACEMENT_ATTEMPTS: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub n_logs: usize,
    /// Inclusive disc radius range in pixels.
    pub radius_range: (f64, f64),
    /// Background pixels guaranteed between any two shapes.
    pub min_gap: usize,
    pub seed: u64,
    pub noise_blobs: usize,
    pub noise_area_range: (usize, usize),
    /// Relative amplitude of a radial sinusoid on each face, at most 0.2.
    /// Non-zero values are meant for Hough stress tests only.
    pub roughness: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            n_logs: 10,
            radius_range: (8.0, 20.0),
            min_gap: 3,
            seed: 0,
            noise_blobs: 0,
            noise_area_range: (20, 60),
            roughness: 0.0,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.radius_range;
        if !(lo > 0.0) || lo > hi || !hi.is_finite() {
            return Err(Error::invalid(format!(
                "radius_range must satisfy 0 < r_lo <= r_hi, got ({lo}, {hi})"
            )));
        }
        let (alo, ahi) = self.noise_area_range;
        if self.noise_blobs > 0 && (alo == 0 || alo > ahi) {
            return Err(Error::invalid(format!(
                "noise_area_range must satisfy 0 < a_lo <= a_hi, got ({alo}, {ahi})"
            )));
        }
        if !(0.0..=0.2).contains(&self.roughness) {
            return Err(Error::invalid(format!(
                "roughness must be in [0, 0.2], got {}",
                self.roughness
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("scene dimensions must be non-zero"));
        }
        Ok(())
    }

    fn separation(&self) -> f64 {
        (self.min_gap as f64 + 1.0) * SQRT_2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub label: u32,
    /// `[row, col]`
    pub center: [usize; 2],
    pub radius: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub roughness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lobes: Option<(u32, f64)>,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl LogEntry {
    fn extent(&self) -> f64 {
        self.radius * (1.0 + self.roughness)
    }

    fn contains(&self, row: usize, col: usize) -> bool {
        let dr = row as f64 - self.center[0] as f64;
        let dc = col as f64 - self.center[1] as f64;
        match self.lobes {
            None => dr * dr + dc * dc <= self.radius * self.radius,
            Some((k, phase)) => {
                let theta = dr.atan2(dc);
                let limit = self.radius * (1.0 + self.roughness * (k as f64 * theta + phase).sin());
                dr.hypot(dc) <= limit
            }
        }
    }
}

/// A stray blob that is not a log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBlob {
    pub center: [usize; 2],
    pub area: usize,
    #[serde(skip)]
    pub pixels: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneManifest {
    pub logs: Vec<LogEntry>,
    pub noise: Vec<NoiseBlob>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub spec: SynthSpec,
    pub gt_instances: LabelMap,
    pub gt_mask: BinaryMask,
    pub manifest: SceneManifest,
}

fn in_frame(spec: &SynthSpec, extent: f64) -> Option<(usize, usize, usize, usize)> {
    let margin = extent.ceil() as usize + 1;
    if spec.height <= 2 * margin || spec.width <= 2 * margin {
        return None;
    }
    Some((
        margin,
        spec.height - margin - 1,
        margin,
        spec.width - margin - 1,
    ))
}

fn distance(a: [usize; 2], b: [usize; 2]) -> f64 {
    (a[0] as f64 - b[0] as f64).hypot(a[1] as f64 - b[1] as f64)
}

/// Grows a 4-connected blob of exactly `area` pixels inside a disc of
/// radius `bound` around `center`.
fn grow_blob(
    rng: &mut ChaCha8Rng,
    center: [usize; 2],
    area: usize,
    bound: f64,
) -> Vec<(usize, usize)> {
    let mut pixels = vec![(center[0], center[1])];
    let mut taken = std::collections::HashSet::from([(center[0], center[1])]);
    let mut frontier = Vec::new();
    let push_neighbors = |p: (usize, usize), frontier: &mut Vec<(usize, usize)>| {
        for (dr, dc) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
            let (r, c) = (p.0 as isize + dr, p.1 as isize + dc);
            if r < 0 || c < 0 {
                continue;
            }
            let q = (r as usize, c as usize);
            if distance([q.0, q.1], center) <= bound {
                frontier.push(q);
            }
        }
    };
    push_neighbors(pixels[0], &mut frontier);
    while pixels.len() < area && !frontier.is_empty() {
        let q = frontier.swap_remove(rng.random_range(0..frontier.len()));
        if taken.insert(q) {
            pixels.push(q);
            push_neighbors(q, &mut frontier);
        }
    }
    pixels.sort_unstable();
    pixels
}

pub fn generate(spec: &SynthSpec) -> Result<SynthScene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sep = spec.separation();
    let mut logs: Vec<LogEntry> = Vec::with_capacity(spec.n_logs);

    for k in 0..spec.n_logs {
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let (lo, hi) = spec.radius_range;
            let radius = if lo == hi {
                lo
            } else {
                rng.random_range(lo..=hi)
            };
            let lobes = (spec.roughness > 0.0).then(|| {
                (
                    rng.random_range(3..=6u32),
                    rng.random_range(0.0..(2.0 * PI)),
                )
            });
            let extent = radius * (1.0 + spec.roughness);
            let Some((r0, r1, c0, c1)) = in_frame(spec, extent) else {
                continue;
            };
            let center = [rng.random_range(r0..=r1), rng.random_range(c0..=c1)];
            let clear = logs
                .iter()
                .all(|o| distance(o.center, center) > o.extent() + extent + sep);
            if clear {
                placed = Some(LogEntry {
                    label: k as u32 + 1,
                    center,
                    radius,
                    roughness: if lobes.is_some() { spec.roughness } else { 0.0 },
                    lobes,
                });
                break;
            }
        }
        let Some(entry) = placed else {
            return Err(Error::GenerationFailed(format!(
                "could not place log {} of {} in {}x{} with radii {:?} and min_gap {}",
                k + 1,
                spec.n_logs,
                spec.width,
                spec.height,
                spec.radius_range,
                spec.min_gap
            )));
        };
        logs.push(entry);
    }

    let mut labels = vec![0u32; spec.width * spec.height];
    for log in &logs {
        let ext = log.extent().ceil() as usize + 1;
        let (cr, cc) = (log.center[0], log.center[1]);
        for r in cr.saturating_sub(ext)..=(cr + ext).min(spec.height - 1) {
            for c in cc.saturating_sub(ext)..=(cc + ext).min(spec.width - 1) {
                if log.contains(r, c) {
                    labels[r * spec.width + c] = log.label;
                }
            }
        }
    }

    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    noise_rng.set_stream(1);
    let mut noise: Vec<NoiseBlob> = Vec::with_capacity(spec.noise_blobs);
    for k in 0..spec.noise_blobs {
        let (alo, ahi) = spec.noise_area_range;
        let bound = (ahi as f64).sqrt().ceil();
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let area = noise_rng.random_range(alo..=ahi);
            let Some((r0, r1, c0, c1)) = in_frame(spec, bound) else {
                break;
            };
            let center = [
                noise_rng.random_range(r0..=r1),
                noise_rng.random_range(c0..=c1),
            ];
            let clear = logs
                .iter()
                .all(|o| distance(o.center, center) > o.extent() + bound + sep)
                && noise
                    .iter()
                    .all(|b| distance(b.center, center) > 2.0 * bound + sep);
            if clear {
                let pixels = grow_blob(&mut noise_rng, center, area, bound);
                placed = Some(NoiseBlob {
                    center,
                    area: pixels.len(),
                    pixels,
                });
                break;
            }
        }
        let Some(blob) = placed else {
            return Err(Error::GenerationFailed(format!(
                "could not place noise blob {} of {}",
                k + 1,
                spec.noise_blobs
            )));
        };
        noise.push(blob);
    }

    let gt_instances = LabelMap::new(spec.width, spec.height, labels)?;
    let gt_mask = gt_instances.to_mask();
    Ok(SynthScene {
        spec: spec.clone(),
        gt_instances,
        gt_mask,
        manifest: SceneManifest { logs, noise },
    })
}

/// Manufactured prediction errors against a scene.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbSpec {
    /// Instance pairs bridged by a 3-px corridor; chained pairs form larger
    /// merged groups.
    pub merge_pairs: Vec<(u32, u32)>,
    pub drop_labels: Vec<u32>,
    pub extra_noise: usize,
    pub seed: u64,
}

/// Pixels within one pixel of the segment between two centers.
fn corridor(a: [usize; 2], b: [usize; 2], width: usize, height: usize) -> Vec<(usize, usize)> {
    let (ar, ac) = (a[0] as f64, a[1] as f64);
    let (br, bc) = (b[0] as f64, b[1] as f64);
    let (dr, dc) = (br - ar, bc - ac);
    let len2 = dr * dr + dc * dc;
    let r0 = a[0].min(b[0]).saturating_sub(2);
    let r1 = (a[0].max(b[0]) + 2).min(height - 1);
    let c0 = a[1].min(b[1]).saturating_sub(2);
    let c1 = (a[1].max(b[1]) + 2).min(width - 1);
    let mut out = Vec::new();
    for r in r0..=r1 {
        for c in c0..=c1 {
            let (pr, pc) = (r as f64 - ar, c as f64 - ac);
            let t = if len2 == 0.0 {
                0.0
            } else {
                ((pr * dr + pc * dc) / len2).clamp(0.0, 1.0)
            };
            let (qr, qc) = (pr - t * dr, pc - t * dc);
            if qr * qr + qc * qc <= 1.0 {
                out.push((r, c));
            }
        }
    }
    out
}

/// Chebyshev-distance-1 neighborhood including the pixel itself.
fn touches(
    owner: &[i64],
    width: usize,
    height: usize,
    r: usize,
    c: usize,
    ok: impl Fn(i64) -> bool,
) -> bool {
    for rr in r.saturating_sub(1)..=(r + 1).min(height - 1) {
        for cc in c.saturating_sub(1)..=(c + 1).min(width - 1) {
            let o = owner[rr * width + cc];
            if o != 0 && !ok(o) {
                return true;
            }
        }
    }
    false
}

/// Builds a prediction from the ground truth with known errors and the
/// tally any correct matcher must report for it. Scene noise blobs are
/// always part of the prediction and count as noise.
pub fn perturb(scene: &SynthScene, p: &PerturbSpec) -> Result<(LabelMap, CountTally)> {
    let n = scene.gt_instances.component_count();
    let (w, h) = (scene.spec.width, scene.spec.height);
    let valid = |l: u32| (1..=n).contains(&l);
    for &(a, b) in &p.merge_pairs {
        if !valid(a) || !valid(b) {
            return Err(Error::invalid(format!(
                "merge pair ({a}, {b}) names a missing label"
            )));
        }
        if a == b {
            return Err(Error::invalid(format!(
                "merge pair ({a}, {b}) is not distinct"
            )));
        }
    }
    let mut dropped = p.drop_labels.clone();
    dropped.sort_unstable();
    dropped.dedup();
    for &d in &dropped {
        if !valid(d) {
            return Err(Error::invalid(format!("drop label {d} does not exist")));
        }
        if p.merge_pairs.iter().any(|&(a, b)| a == d || b == d) {
            return Err(Error::invalid(format!(
                "label {d} is both dropped and merged"
            )));
        }
    }

    // group merged logs
    let mut group: Vec<u32> = (0..=n).collect();
    fn root(g: &mut [u32], mut x: u32) -> u32 {
        while g[x as usize] != x {
            g[x as usize] = g[g[x as usize] as usize];
            x = g[x as usize];
        }
        x
    }
    for &(a, b) in &p.merge_pairs {
        let (ra, rb) = (root(&mut group, a), root(&mut group, b));
        group[ra.max(rb) as usize] = ra.min(rb);
    }
    let merged: Vec<u32> = (1..=n)
        .filter(|&l| {
            let r = root(&mut group, l);
            (1..=n).any(|o| o != l && root(&mut group, o) == r)
        })
        .collect();

    // owner: group id for logs, negative ids for noise
    let mut owner = vec![0i64; w * h];
    for (i, &l) in scene.gt_instances.as_slice().iter().enumerate() {
        if l != 0 && dropped.binary_search(&l).is_err() {
            owner[i] = root(&mut group, l) as i64;
        }
    }
    let mut noise_id = 0i64;
    for blob in &scene.manifest.noise {
        noise_id -= 1;
        for &(r, c) in &blob.pixels {
            owner[r * w + c] = noise_id;
        }
    }

    let center_of = |l: u32| scene.manifest.logs[l as usize - 1].center;
    for &(a, b) in &p.merge_pairs {
        let g = root(&mut group, a) as i64;
        let path = corridor(center_of(a), center_of(b), w, h);
        for &(r, c) in &path {
            if touches(&owner, w, h, r, c, |o| o == g) {
                return Err(Error::GenerationFailed(format!(
                    "bridge between {a} and {b} would touch another shape"
                )));
            }
        }
        for (r, c) in path {
            owner[r * w + c] = g;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    rng.set_stream(2);
    let (alo, ahi) = scene.spec.noise_area_range;
    let (alo, ahi) = (alo.max(1), ahi.max(alo.max(1)));
    let bound = (ahi as f64).sqrt().ceil();
    for k in 0..p.extra_noise {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let Some((r0, r1, c0, c1)) = in_frame(&scene.spec, bound) else {
                break;
            };
            let center = [rng.random_range(r0..=r1), rng.random_range(c0..=c1)];
            let area = rng.random_range(alo..=ahi);
            let blob = grow_blob(&mut rng, center, area, bound);
            if blob
                .iter()
                .all(|&(r, c)| !touches(&owner, w, h, r, c, |_| false))
            {
                noise_id -= 1;
                for (r, c) in blob {
                    owner[r * w + c] = noise_id;
                }
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::GenerationFailed(format!(
                "could not place extra noise blob {} of {}",
                k + 1,
                p.extra_noise
            )));
        }
    }

    let mask = BinaryMask::new(w, h, owner.iter().map(|&o| o != 0).collect())?;
    let pred = label(&mask, Connectivity::Eight);
    let noise_total = scene.manifest.noise.len() + p.extra_noise;
    let expected = CountTally {
        ci: n - merged.len() as u32 - dropped.len() as u32,
        e: dropped.len() as u32,
        i: merged.len() as u32,
        n: noise_total as u32,
    };
    Ok((pred, expected))
}

/// For each log, the nearest other log by center distance.
pub fn nearest_neighbors(scene: &SynthScene) -> Vec<(u32, u32)> {
    let logs = &scene.manifest.logs;
    logs.iter()
        .filter_map(|a| {
            logs.iter()
                .filter(|b| b.label != a.label)
                .min_by(|x, y| {
                    distance(a.center, x.center).total_cmp(&distance(a.center, y.center))
                })
                .map(|b| (a.label, b.label))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{iss, match_instances, MatchParams};

    fn spec(n: usize, seed: u64) -> SynthSpec {
        SynthSpec {
            n_logs: n,
            seed,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn empty_scene() {
        let s = generate(&spec(0, 1)).unwrap();
        assert!(s.gt_mask.is_empty());
        assert_eq!(s.gt_instances.component_count(), 0);
    }

    #[test]
    fn ten_logs_are_ten_components() {
        let s = generate(&spec(10, 7)).unwrap();
        assert_eq!(label(&s.gt_mask, Connectivity::Eight).component_count(), 10);
        assert_eq!(label(&s.gt_mask, Connectivity::Four).component_count(), 10);
        assert_eq!(s.manifest.logs.len(), 10);
        assert_eq!(s.gt_mask, s.gt_instances.to_mask());
    }

    #[test]
    fn deterministic() {
        let sp = SynthSpec {
            noise_blobs: 3,
            roughness: 0.15,
            ..spec(8, 42)
        };
        assert_eq!(generate(&sp).unwrap(), generate(&sp).unwrap());
        let other = generate(&SynthSpec {
            seed: 43,
            ..sp.clone()
        })
        .unwrap();
        assert_ne!(generate(&sp).unwrap().gt_instances, other.gt_instances);
    }

    #[test]
    fn infeasible_packing_fails_cleanly() {
        let sp = SynthSpec {
            width: 40,
            height: 40,
            n_logs: 5,
            radius_range: (15.0, 15.0),
            ..SynthSpec::default()
        };
        assert!(matches!(generate(&sp), Err(Error::GenerationFailed(_))));
    }

    #[test]
    fn noise_blobs_are_separate_from_logs() {
        let sp = SynthSpec {
            noise_blobs: 4,
            ..spec(6, 3)
        };
        let s = generate(&sp).unwrap();
        assert_eq!(s.manifest.noise.len(), 4);
        for b in &s.manifest.noise {
            assert!((20..=60).contains(&b.area));
            for &(r, c) in &b.pixels {
                assert!(!s.gt_mask.get(r, c));
            }
        }
    }

    #[test]
    fn perturb_examples() {
        let s = generate(&spec(5, 11)).unwrap();
        let (pred, t) = perturb(&s, &PerturbSpec::default()).unwrap();
        assert_eq!(
            t,
            CountTally {
                ci: 5,
                e: 0,
                i: 0,
                n: 0
            }
        );
        assert_eq!(pred.component_count(), 5);

        let pair = nearest_neighbors(&s)[0];
        let (pred, t) = perturb(
            &s,
            &PerturbSpec {
                merge_pairs: vec![pair],
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(
            t,
            CountTally {
                ci: 3,
                e: 0,
                i: 2,
                n: 0
            }
        );
        let m = match_instances(&pred, &s.gt_instances, &MatchParams::default()).unwrap();
        assert_eq!(m.tally, t);
        assert_eq!(iss(&m.tally).unwrap(), iss(&t).unwrap());
    }

    #[test]
    fn perturb_rejects_bad_labels() {
        let s = generate(&spec(3, 2)).unwrap();
        let bad = |p: PerturbSpec| perturb(&s, &p).unwrap_err();
        assert!(matches!(
            bad(PerturbSpec {
                merge_pairs: vec![(1, 1)],
                ..Default::default()
            }),
            Error::InvalidInput(_)
        ));
        assert!(matches!(
            bad(PerturbSpec {
                drop_labels: vec![9],
                ..Default::default()
            }),
            Error::InvalidInput(_)
        ));
        assert!(matches!(
            bad(PerturbSpec {
                merge_pairs: vec![(1, 2)],
                drop_labels: vec![2],
                ..Default::default()
            }),
            Error::InvalidInput(_)
        ));
    }

    #[test]
    fn drops_and_noise() {
        let s = generate(&SynthSpec {
            noise_blobs: 2,
            ..spec(6, 5)
        })
        .unwrap();
        let p = PerturbSpec {
            drop_labels: vec![2, 4],
            extra_noise: 3,
            seed: 9,
            ..Default::default()
        };
        let (pred, t) = perturb(&s, &p).unwrap();
        assert_eq!(
            t,
            CountTally {
                ci: 4,
                e: 2,
                i: 0,
                n: 5
            }
        );
        let m = match_instances(&pred, &s.gt_instances, &MatchParams::default()).unwrap();
        assert_eq!(m.tally, t);
    }
}
