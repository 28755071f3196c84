//! Circular Hough transform over binary masks.
//!
//! Every boundary pixel votes for each `(center, radius)` whose circle passes
//! within half a pixel of it. Scores are normalized by the ideal perimeter
//! `2πr`, thresholded, and thinned with greedy non-maximum suppression.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HoughParams {
    pub r_min: usize,
    pub r_max: usize,
    /// Minimum fraction of the ideal perimeter that must vote.
    pub vote_threshold: f64,
    /// Accepted centers are at least this far apart.
    pub nms_min_center_dist: f64,
    pub radius_step: usize,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            r_min: 5,
            r_max: 60,
            vote_threshold: 0.4,
            nms_min_center_dist: 5.0,
            radius_step: 1,
        }
    }
}

impl HoughParams {
    /// Defaults with the given radius range; NMS distance follows `r_min`.
    pub fn with_radii(r_min: usize, r_max: usize) -> Self {
        Self {
            r_min,
            r_max,
            nms_min_center_dist: r_min as f64,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r_min == 0 || self.r_min > self.r_max {
            return Err(Error::invalid(format!(
                "need 0 < r_min <= r_max, got r_min={} r_max={}",
                self.r_min, self.r_max
            )));
        }
        if !(self.vote_threshold > 0.0 && self.vote_threshold <= 1.0) {
            return Err(Error::invalid(format!(
                "vote_threshold must be in (0, 1], got {}",
                self.vote_threshold
            )));
        }
        if !(self.nms_min_center_dist >= 0.0) {
            return Err(Error::invalid("nms_min_center_dist must be >= 0"));
        }
        if self.radius_step == 0 {
            return Err(Error::invalid("radius_step must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    /// `[row, col]`
    pub center: [usize; 2],
    pub radius: usize,
    /// Votes divided by `2πr`.
    pub score: f64,
}

/// Foreground pixels with a 4-neighbor that is background or out of frame.
pub fn boundary_pixels(mask: &BinaryMask) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..mask.height() {
        for c in 0..mask.width() {
            if !mask.get(r, c) {
                continue;
            }
            let (ri, ci) = (r as isize, c as isize);
            let interior = mask.get_signed(ri - 1, ci)
                && mask.get_signed(ri + 1, ci)
                && mask.get_signed(ri, ci - 1)
                && mask.get_signed(ri, ci + 1);
            if !interior {
                out.push((r, c));
            }
        }
    }
    out
}

/// Integer offsets whose distance from the origin is within 0.5 of `radius`.
fn ring_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as f64;
    let reach = radius as isize + 1;
    let mut out = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let d = ((dy * dy + dx * dx) as f64).sqrt();
            if (d - r).abs() <= 0.5 {
                out.push((dy, dx));
            }
        }
    }
    out
}

/// Accumulates votes for one radius and appends the centers that pass.
fn accumulate(
    edges: &[(usize, usize)],
    width: usize,
    height: usize,
    radius: usize,
    threshold: f64,
    acc: &mut Vec<u32>,
    out: &mut Vec<Circle>,
) {
    acc.clear();
    acc.resize(width * height, 0);
    let ring = ring_offsets(radius);
    let reach = radius + 1;
    let linear: Vec<isize> = ring
        .iter()
        .map(|&(dy, dx)| dy * width as isize + dx)
        .collect();
    for &(r, c) in edges {
        let inside = r >= reach && c >= reach && r + reach < height && c + reach < width;
        if inside {
            let base = (r * width + c) as isize;
            for &off in &linear {
                acc[(base + off) as usize] += 1;
            }
        } else {
            for &(dy, dx) in &ring {
                let (rr, cc) = (r as isize + dy, c as isize + dx);
                if rr >= 0 && cc >= 0 && (rr as usize) < height && (cc as usize) < width {
                    acc[rr as usize * width + cc as usize] += 1;
                }
            }
        }
    }
    let perimeter = 2.0 * PI * radius as f64;
    for (i, &votes) in acc.iter().enumerate() {
        if votes == 0 {
            continue;
        }
        let score = votes as f64 / perimeter;
        if score >= threshold {
            out.push(Circle {
                center: [i / width, i % width],
                radius,
                score,
            });
        }
    }
}

/// Greedy suppression in descending-score order.
fn suppress(mut candidates: Vec<Circle>, min_dist: f64) -> Vec<Circle> {
    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.radius.cmp(&b.radius))
            .then(a.center.cmp(&b.center))
    });
    let min_sq = min_dist * min_dist;
    let mut accepted: Vec<Circle> = Vec::new();
    for cand in candidates {
        let clash = accepted.iter().any(|a| {
            let dy = a.center[0] as f64 - cand.center[0] as f64;
            let dx = a.center[1] as f64 - cand.center[1] as f64;
            dy * dy + dx * dx < min_sq
        });
        if !clash {
            accepted.push(cand);
        }
    }
    accepted
}

pub fn detect_circles(mask: &BinaryMask, params: &HoughParams) -> Result<Vec<Circle>> {
    params.validate()?;
    let edges = boundary_pixels(mask);
    if edges.is_empty() {
        return Ok(Vec::new());
    }
    let mut acc = Vec::new();
    let mut candidates = Vec::new();
    for radius in (params.r_min..=params.r_max).step_by(params.radius_step) {
        accumulate(
            &edges,
            mask.width(),
            mask.height(),
            radius,
            params.vote_threshold,
            &mut acc,
            &mut candidates,
        );
    }
    Ok(suppress(candidates, params.nms_min_center_dist))
}

/// Single-radius detector for gradient renderings: the image is cut at
/// intensity > 127 so only each blob's bright core casts votes.
pub fn detect_centroids_fixed_radius(
    img: &GrayImage,
    r_fixed: usize,
    params: &HoughParams,
) -> Result<Vec<Circle>> {
    params.validate()?;
    if r_fixed < params.r_min || r_fixed > params.r_max {
        return Err(Error::invalid(format!(
            "fixed radius {r_fixed} outside [{}, {}]",
            params.r_min, params.r_max
        )));
    }
    let core = BinaryMask::from_fn(img.width(), img.height(), |r, c| img.get(r, c) > 127);
    let edges = boundary_pixels(&core);
    let mut acc = Vec::new();
    let mut candidates = Vec::new();
    accumulate(
        &edges,
        img.width(),
        img.height(),
        r_fixed,
        params.vote_threshold,
        &mut acc,
        &mut candidates,
    );
    Ok(suppress(candidates, params.nms_min_center_dist))
}
