//! Binary and grayscale morphology.
//!
//! Out-of-frame pixels are background everywhere in this module, so
//! erosion shrinks shapes that touch the image border and the distance
//! transform measures distance to the frame as well as to interior holes.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::components::{self, Connectivity};
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage, Image, LabelMap, RgbImage};

/// Unit neighborhood used by iterated erosion and dilation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructuringElement {
    /// Full 3x3 block: `k` iterations equal a Chebyshev ball of radius `k`.
    #[default]
    Square3,
    /// 3x3 cross: `k` iterations equal a Manhattan ball of radius `k`.
    Cross3,
}

impl StructuringElement {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            StructuringElement::Square3 => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 0),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
            StructuringElement::Cross3 => &[(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)],
        }
    }
}

/// One pass of erosion (`all == true`) or dilation (`all == false`).
fn step(mask: &BinaryMask, se: StructuringElement, all: bool) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    match se {
        // Separable: a 1x3 pass followed by a 3x1 pass.
        StructuringElement::Square3 => {
            let src = mask.as_slice();
            let mut horiz = vec![false; w * h];
            for r in 0..h {
                let row = &src[r * w..(r + 1) * w];
                for c in 0..w {
                    let left = c > 0 && row[c - 1];
                    let right = c + 1 < w && row[c + 1];
                    horiz[r * w + c] = if all {
                        left && row[c] && right
                    } else {
                        left || row[c] || right
                    };
                }
            }
            BinaryMask::from_fn(w, h, |r, c| {
                let up = r > 0 && horiz[(r - 1) * w + c];
                let mid = horiz[r * w + c];
                let down = r + 1 < h && horiz[(r + 1) * w + c];
                if all {
                    up && mid && down
                } else {
                    up || mid || down
                }
            })
        }
        StructuringElement::Cross3 => BinaryMask::from_fn(w, h, |r, c| {
            let (r, c) = (r as isize, c as isize);
            let mut it = se
                .offsets()
                .iter()
                .map(|&(dr, dc)| mask.get_signed(r + dr, c + dc));
            if all {
                it.all(|v| v)
            } else {
                it.any(|v| v)
            }
        }),
    }
}

pub fn erode(mask: &BinaryMask, se: StructuringElement, iterations: usize) -> BinaryMask {
    let mut out = mask.clone();
    for _ in 0..iterations {
        if out.is_empty() {
            break;
        }
        out = step(&out, se, true);
    }
    out
}

pub fn dilate(mask: &BinaryMask, se: StructuringElement, iterations: usize) -> BinaryMask {
    let mut out = mask.clone();
    for _ in 0..iterations {
        out = step(&out, se, false);
    }
    out
}

/// Erodes each instance independently: a pixel survives only while its whole
/// neighborhood carries the same label. Vanished instances are dropped and
/// the rest renumbered in raster order.
pub fn erode_labels(labels: &LabelMap, se: StructuringElement, iterations: usize) -> LabelMap {
    let (w, h) = (labels.width(), labels.height());
    let mut cur: Vec<u32> = labels.as_slice().to_vec();
    for _ in 0..iterations {
        let mut next = vec![0u32; w * h];
        let mut any = false;
        for r in 0..h {
            for c in 0..w {
                let l = cur[r * w + c];
                if l == 0 {
                    continue;
                }
                let keep = se.offsets().iter().all(|&(dr, dc)| {
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    rr >= 0
                        && cc >= 0
                        && (rr as usize) < h
                        && (cc as usize) < w
                        && cur[rr as usize * w + cc as usize] == l
                });
                if keep {
                    next[r * w + c] = l;
                    any = true;
                }
            }
        }
        cur = next;
        if !any {
            break;
        }
    }
    LabelMap::canonicalize(w, h, &cur).expect("dimensions preserved")
}

/// Per-pixel Euclidean distance to the nearest background pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::invalid("distance field length mismatch"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(
                "distance values must be finite and non-negative",
            ));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// 1-D squared distance transform of a sampled function (lower envelope of
/// parabolas). `f` holds 0 on background and +inf on foreground.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let mut first = 0usize;
    // Leading +inf samples contribute no parabola.
    while first < n && f[first].is_infinite() {
        first += 1;
    }
    if first == n {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    v[0] = first;
    for q in first + 1..n {
        if f[q].is_infinite() {
            continue;
        }
        loop {
            let p = v[k];
            let s =
                ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                // k == 0 never reaches here since z[0] is -inf
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}

/// Exact Euclidean distance transform. The frame is surrounded by a ring of
/// background at unit spacing.
pub fn edt(mask: &BinaryMask) -> DistanceField {
    let (w, h) = (mask.width(), mask.height());
    let (pw, ph) = (w + 2, h + 2);
    let mut grid = vec![0.0f64; pw * ph];
    for r in 0..h {
        for c in 0..w {
            if mask.get(r, c) {
                grid[(r + 1) * pw + c + 1] = f64::INFINITY;
            }
        }
    }
    let n = pw.max(ph);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    // columns
    for c in 0..pw {
        for r in 0..ph {
            f[r] = grid[r * pw + c];
        }
        edt_1d(&f[..ph], &mut out[..ph], &mut v, &mut z);
        for r in 0..ph {
            grid[r * pw + c] = out[r];
        }
    }
    // rows
    for r in 0..ph {
        let row = &mut grid[r * pw..(r + 1) * pw];
        f[..pw].copy_from_slice(row);
        edt_1d(&f[..pw], &mut out[..pw], &mut v, &mut z);
        row.copy_from_slice(&out[..pw]);
    }
    let mut values = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            values.push(grid[(r + 1) * pw + c + 1].sqrt());
        }
    }
    DistanceField {
        width: w,
        height: h,
        values,
    }
}

/// Keeps the pixels whose Euclidean distance to background exceeds `radius`.
pub fn dynamic_erode(mask: &BinaryMask, radius: f64) -> Result<BinaryMask> {
    if radius.is_nan() || radius < 0.0 {
        return Err(Error::invalid(format!(
            "erosion radius must be >= 0, got {radius}"
        )));
    }
    if radius == 0.0 {
        return Ok(mask.clone());
    }
    let field = edt(mask);
    Ok(BinaryMask::from_fn(mask.width(), mask.height(), |r, c| {
        field.get(r, c) > radius
    }))
}

fn causal_offsets(conn: Connectivity) -> &'static [(isize, isize)] {
    match conn {
        Connectivity::Four => &[(-1, 0), (0, -1)],
        Connectivity::Eight => &[(-1, -1), (-1, 0), (-1, 1), (0, -1)],
    }
}

fn neighbor_offsets(conn: Connectivity) -> &'static [(isize, isize)] {
    match conn {
        Connectivity::Four => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
        Connectivity::Eight => &[
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ],
    }
}

/// Grayscale reconstruction by dilation, hybrid raster/queue algorithm.
/// `marker` is updated in place; caller guarantees `marker <= mask`.
fn reconstruct_in_place<T: Copy + PartialOrd>(
    marker: &mut [T],
    mask: &[T],
    w: usize,
    h: usize,
    conn: Connectivity,
) {
    let max = |a: T, b: T| if b > a { b } else { a };
    let min = |a: T, b: T| if b < a { b } else { a };
    let at = |r: usize, c: usize, dr: isize, dc: isize| -> Option<usize> {
        let (rr, cc) = (r as isize + dr, c as isize + dc);
        (rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w)
            .then(|| rr as usize * w + cc as usize)
    };
    let fwd = causal_offsets(conn);

    for r in 0..h {
        for c in 0..w {
            let p = r * w + c;
            let mut m = marker[p];
            for &(dr, dc) in fwd {
                if let Some(q) = at(r, c, dr, dc) {
                    m = max(m, marker[q]);
                }
            }
            marker[p] = min(m, mask[p]);
        }
    }

    let mut queue = VecDeque::new();
    for r in (0..h).rev() {
        for c in (0..w).rev() {
            let p = r * w + c;
            let mut m = marker[p];
            for &(dr, dc) in fwd {
                if let Some(q) = at(r, c, -dr, -dc) {
                    m = max(m, marker[q]);
                }
            }
            marker[p] = min(m, mask[p]);
            for &(dr, dc) in fwd {
                if let Some(q) = at(r, c, -dr, -dc) {
                    if marker[q] < marker[p] && marker[q] < mask[q] {
                        queue.push_back(p);
                        break;
                    }
                }
            }
        }
    }

    let all = neighbor_offsets(conn);
    while let Some(p) = queue.pop_front() {
        let (r, c) = (p / w, p % w);
        for &(dr, dc) in all {
            if let Some(q) = at(r, c, dr, dc) {
                if marker[q] < marker[p] && mask[q] != marker[q] {
                    marker[q] = min(marker[p], mask[q]);
                    queue.push_back(q);
                }
            }
        }
    }
}

/// Grayscale reconstruction of `mask` from `marker` by geodesic dilation.
pub fn reconstruct(marker: &GrayImage, mask: &GrayImage, conn: Connectivity) -> Result<GrayImage> {
    if marker.width() != mask.width() || marker.height() != mask.height() {
        return Err(Error::invalid(format!(
            "marker is {}x{} but mask is {}x{}",
            marker.width(),
            marker.height(),
            mask.width(),
            mask.height()
        )));
    }
    if let Some(i) = marker
        .as_slice()
        .iter()
        .zip(mask.as_slice())
        .position(|(a, b)| a > b)
    {
        return Err(Error::invalid(format!(
            "marker exceeds mask at pixel ({}, {})",
            i / mask.width(),
            i % mask.width()
        )));
    }
    let mut out = marker.as_slice().to_vec();
    reconstruct_in_place(&mut out, mask.as_slice(), mask.width(), mask.height(), conn);
    GrayImage::new(mask.width(), mask.height(), out)
}

/// Real-valued reconstruction used on distance fields.
pub fn reconstruct_field(
    marker: &DistanceField,
    mask: &DistanceField,
    conn: Connectivity,
) -> Result<DistanceField> {
    if marker.width != mask.width || marker.height != mask.height {
        return Err(Error::invalid("marker and mask dimensions differ"));
    }
    if marker.values.iter().zip(&mask.values).any(|(a, b)| a > b) {
        return Err(Error::invalid("marker exceeds mask"));
    }
    let mut out = marker.values.clone();
    reconstruct_in_place(&mut out, &mask.values, mask.width, mask.height, conn);
    Ok(DistanceField {
        width: mask.width,
        height: mask.height,
        values: out,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Centroid {
    pub row: usize,
    pub col: usize,
}

fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

/// One centroid per regional maximum whose dynamic reaches `h`.
///
/// The h-maxima transform `R = reconstruct(max(field - h, 0), field)` is
/// subtracted from the field; each connected region of positive residue is
/// a maximum cap, and it is kept when its residue peaks at `h`.
pub fn h_maxima_centroids(
    field: &DistanceField,
    h: f64,
    conn: Connectivity,
) -> Result<Vec<Centroid>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid(format!("h must be positive, got {h}")));
    }
    const EPS: f64 = 1e-9;
    let marker = DistanceField {
        width: field.width,
        height: field.height,
        values: field.values.iter().map(|&v| (v - h).max(0.0)).collect(),
    };
    let recon = reconstruct_field(&marker, field, conn)?;
    let residue: Vec<f64> = field
        .values
        .iter()
        .zip(&recon.values)
        .map(|(f, r)| f - r)
        .collect();
    let caps = BinaryMask::new(
        field.width,
        field.height,
        residue.iter().map(|&d| d > EPS).collect(),
    )?;
    let labels = components::label(&caps, conn);
    let n = labels.component_count() as usize;
    let mut sum_r = vec![0.0f64; n + 1];
    let mut sum_c = vec![0.0f64; n + 1];
    let mut area = vec![0usize; n + 1];
    let mut peak = vec![0.0f64; n + 1];
    for (i, &l) in labels.as_slice().iter().enumerate() {
        if l == 0 {
            continue;
        }
        let l = l as usize;
        sum_r[l] += (i / field.width) as f64;
        sum_c[l] += (i % field.width) as f64;
        area[l] += 1;
        peak[l] = peak[l].max(residue[i]);
    }
    Ok((1..=n)
        .filter(|&l| peak[l] >= h - EPS)
        .map(|l| Centroid {
            row: round_half_up(sum_r[l] / area[l] as f64) as usize,
            col: round_half_up(sum_c[l] / area[l] as f64) as usize,
        })
        .collect())
}

/// The three ground-truth renderings used to pre-process training targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum GroundTruthMode {
    /// Solid (255, 0, 0) instances on black.
    FlatRed,
    /// Red radial ramp limited to `max_diameter`.
    RedGradientCapped { max_diameter: f64 },
    /// Gray radial ramp over each instance's full equivalent radius.
    GrayGradientFull,
}

/// Linear ramp: 255 at the center, 0 at `radius` and beyond.
pub fn ramp_intensity(distance: f64, radius: f64) -> u8 {
    if !(radius > 0.0) {
        return 0;
    }
    let v = 255.0 * (1.0 - distance / radius).max(0.0);
    round_half_up(v).min(255.0) as u8
}

pub fn make_ground_truth(instances: &LabelMap, mode: GroundTruthMode) -> Result<Image> {
    let (w, h) = (instances.width(), instances.height());
    if w == 0 || h == 0 {
        return Err(Error::invalid("ground truth needs a non-empty frame"));
    }
    let cap = match mode {
        GroundTruthMode::RedGradientCapped { max_diameter } => {
            if !(max_diameter > 0.0) {
                return Err(Error::invalid(format!(
                    "max_diameter must be positive, got {max_diameter}"
                )));
            }
            max_diameter / 2.0
        }
        _ => f64::INFINITY,
    };
    if let GroundTruthMode::FlatRed = mode {
        let data = instances
            .as_slice()
            .iter()
            .map(|&l| if l != 0 { [255, 0, 0] } else { [0, 0, 0] })
            .collect();
        return Ok(Image::Rgb(RgbImage::new(w, h, data)?));
    }

    let n = instances.component_count() as usize;
    let mut sum_r = vec![0.0f64; n + 1];
    let mut sum_c = vec![0.0f64; n + 1];
    let mut area = vec![0usize; n + 1];
    for (i, &l) in instances.as_slice().iter().enumerate() {
        let l = l as usize;
        sum_r[l] += (i / w) as f64;
        sum_c[l] += (i % w) as f64;
        area[l] += 1;
    }
    let intensity = |i: usize, l: u32| -> u8 {
        if l == 0 {
            return 0;
        }
        let l = l as usize;
        let a = area[l] as f64;
        let (cr, cc) = (sum_r[l] / a, sum_c[l] / a);
        let d = ((i / w) as f64 - cr).hypot((i % w) as f64 - cc);
        let radius = cap.min((a / PI).sqrt());
        ramp_intensity(d, radius)
    };
    let labels = instances.as_slice();
    match mode {
        GroundTruthMode::GrayGradientFull => Ok(Image::Gray(GrayImage::new(
            w,
            h,
            labels
                .iter()
                .enumerate()
                .map(|(i, &l)| intensity(i, l))
                .collect(),
        )?)),
        _ => Ok(Image::Rgb(RgbImage::new(
            w,
            h,
            labels
                .iter()
                .enumerate()
                .map(|(i, &l)| [intensity(i, l), 0, 0])
                .collect(),
        )?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{binarize, BinarizePolicy};
    use proptest::prelude::*;

    fn disc(size: usize, cr: isize, cc: isize, radius: f64) -> BinaryMask {
        BinaryMask::from_fn(size, size, |r, c| {
            let (dr, dc) = (r as isize - cr, c as isize - cc);
            ((dr * dr + dc * dc) as f64) <= radius * radius
        })
    }

    fn square(size: usize, lo: usize, hi: usize) -> BinaryMask {
        BinaryMask::from_fn(size, size, |r, c| {
            (lo..=hi).contains(&r) && (lo..=hi).contains(&c)
        })
    }

    /// Brute-force squared distance including the out-of-frame ring.
    fn brute_edt(m: &BinaryMask, r: usize, c: usize) -> f64 {
        if !m.get(r, c) {
            return 0.0;
        }
        let (w, h) = (m.width() as isize, m.height() as isize);
        let mut best = f64::INFINITY;
        for rr in -1..=h {
            for cc in -1..=w {
                if !m.get_signed(rr, cc) {
                    let d = ((rr - r as isize).pow(2) + (cc - c as isize).pow(2)) as f64;
                    best = best.min(d);
                }
            }
        }
        best.sqrt()
    }

    fn arb_mask(max: usize) -> impl Strategy<Value = BinaryMask> {
        (1..=max, 1..=max, 0.2f64..0.95).prop_flat_map(|(w, h, p)| {
            proptest::collection::vec(proptest::bool::weighted(p), w * h)
                .prop_map(move |d| BinaryMask::new(w, h, d).unwrap())
        })
    }

    #[test]
    fn erode_examples() {
        assert!(erode(&BinaryMask::empty(9, 9), StructuringElement::Square3, 15).is_empty());
        let m = BinaryMask::from_fn(5, 5, |_, _| true);
        assert_eq!(erode(&m, StructuringElement::Square3, 1), square(5, 1, 3));
        assert!(erode(&disc(41, 20, 20, 10.0), StructuringElement::Square3, 15).is_empty());
        let d = disc(41, 20, 20, 10.0);
        assert_eq!(erode(&d, StructuringElement::Cross3, 0), d);
    }

    #[test]
    fn dilate_examples() {
        assert!(dilate(&BinaryMask::empty(5, 5), StructuringElement::Square3, 3).is_empty());
        let mut m = BinaryMask::empty(5, 5);
        m.set(2, 2, true);
        assert_eq!(dilate(&m, StructuringElement::Square3, 1), square(5, 1, 3));
        assert_eq!(dilate(&m, StructuringElement::Square3, 0), m);
        let plus = dilate(&m, StructuringElement::Cross3, 1);
        assert_eq!(plus.count(), 5);
        assert!(!plus.get(1, 1));
    }

    #[test]
    fn edt_examples() {
        let mut m = BinaryMask::empty(5, 5);
        m.set(2, 2, true);
        assert_eq!(edt(&m).get(2, 2), 1.0);
        let full = BinaryMask::from_fn(7, 7, |_, _| true);
        assert_eq!(edt(&full).get(3, 3), 4.0);
        assert!(edt(&BinaryMask::empty(6, 3))
            .as_slice()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn dynamic_erode_examples() {
        let d = disc(81, 40, 40, 20.0);
        let core = dynamic_erode(&d, 15.0).unwrap();
        let target = PI * 25.0;
        let area = core.count() as f64;
        assert!((area - target).abs() <= 0.1 * target, "area {area}");
        assert_eq!(dynamic_erode(&d, 0.0).unwrap(), d);
        assert!(dynamic_erode(&disc(41, 20, 20, 10.0), 15.0)
            .unwrap()
            .is_empty());
        assert!(matches!(
            dynamic_erode(&d, -1.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn reconstruct_examples() {
        let mask = GrayImage::new(4, 1, vec![3, 7, 7, 1]).unwrap();
        assert_eq!(
            reconstruct(&mask, &mask, Connectivity::Eight).unwrap(),
            mask
        );
        let zero = GrayImage::filled(4, 1, 0).unwrap();
        assert_eq!(
            reconstruct(&zero, &mask, Connectivity::Eight).unwrap(),
            zero
        );
        let big = GrayImage::filled(4, 1, 9).unwrap();
        assert!(reconstruct(&big, &mask, Connectivity::Four).is_err());
        let other = GrayImage::filled(2, 2, 0).unwrap();
        assert!(reconstruct(&other, &mask, Connectivity::Four).is_err());
    }

    #[test]
    fn reconstruct_two_plateaus() {
        // 100-plateau on the left, 200-plateau on the right, joined by nothing.
        let mut mask = GrayImage::filled(16, 16, 0).unwrap();
        for r in 2..14 {
            for c in 1..6 {
                mask.set(r, c, 100);
            }
            for c in 9..15 {
                mask.set(r, c, 200);
            }
        }
        let mut marker = GrayImage::filled(16, 16, 0).unwrap();
        marker.set(5, 3, 100);
        let out = reconstruct(&marker, &mask, Connectivity::Eight).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                let want = if mask.get(r, c) == 100 { 100 } else { 0 };
                assert_eq!(out.get(r, c), want, "at ({r},{c})");
            }
        }
    }

    #[test]
    fn h_maxima_examples() {
        let d = disc(61, 30, 30, 15.0);
        let found = h_maxima_centroids(&edt(&d), 2.0, Connectivity::Eight).unwrap();
        assert_eq!(found.len(), 1);
        let c = found[0];
        assert!(c.row.abs_diff(30) <= 2 && c.col.abs_diff(30) <= 2, "{c:?}");

        let zero = DistanceField::new(8, 8, vec![0.0; 64]).unwrap();
        assert!(h_maxima_centroids(&zero, 2.0, Connectivity::Eight)
            .unwrap()
            .is_empty());

        // Radius-15 discs with a 20 px background gap between them.
        let two = BinaryMask::from_fn(90, 40, |r, c| {
            let a = (r as isize - 20).pow(2) + (c as isize - 18).pow(2);
            let b = (r as isize - 20).pow(2) + (c as isize - 68).pow(2);
            a <= 225 || b <= 225
        });
        let found = h_maxima_centroids(&edt(&two), 2.0, Connectivity::Eight).unwrap();
        assert_eq!(found.len(), 2);
        assert!(h_maxima_centroids(&zero, 0.0, Connectivity::Four).is_err());
    }

    #[test]
    fn shallow_maxima_are_ignored() {
        // Peak of height 5 next to a bump of height 3.5 on a 3.0 saddle.
        let vals = vec![0.0, 1.0, 3.0, 5.0, 3.0, 3.5, 3.0, 1.0, 0.0];
        let f = DistanceField::new(9, 1, vals).unwrap();
        let found = h_maxima_centroids(&f, 1.0, Connectivity::Four).unwrap();
        assert_eq!(found, vec![Centroid { row: 0, col: 3 }]);
        let found = h_maxima_centroids(&f, 0.25, Connectivity::Four).unwrap();
        assert_eq!(found.len(), 2);
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp_intensity(0.0, 7.0), 255);
        assert_eq!(ramp_intensity(7.0, 7.0), 0);
        assert_eq!(ramp_intensity(9.0, 7.0), 0);
        assert_eq!(ramp_intensity(3.5, 7.0), 128);
    }

    #[test]
    fn gray_gradient_peaks_at_centroid() {
        let lm = LabelMap::new(3, 3, vec![1; 9]).unwrap();
        let Image::Gray(g) = make_ground_truth(&lm, GroundTruthMode::GrayGradientFull).unwrap()
        else {
            panic!("gray expected");
        };
        assert_eq!(g.get(1, 1), 255);
        // equivalent radius sqrt(9/pi) ~ 1.693, corner distance sqrt(2)
        let r = (9.0 / PI).sqrt();
        assert_eq!(g.get(0, 0), ramp_intensity(2f64.sqrt(), r));
    }

    #[test]
    fn red_gradient_respects_cap() {
        let lm = LabelMap::new(
            41,
            41,
            disc(41, 20, 20, 15.0)
                .as_slice()
                .iter()
                .map(|&b| b as u32)
                .collect(),
        )
        .unwrap();
        let Image::Rgb(img) = make_ground_truth(
            &lm,
            GroundTruthMode::RedGradientCapped { max_diameter: 10.0 },
        )
        .unwrap() else {
            panic!("rgb expected");
        };
        assert_eq!(img.get(20, 20), [255, 0, 0]);
        assert_eq!(img.get(20, 25), [0, 0, 0]);
        assert_eq!(img.get(20, 22), [ramp_intensity(2.0, 5.0), 0, 0]);
        assert!(make_ground_truth(
            &lm,
            GroundTruthMode::RedGradientCapped { max_diameter: 0.0 }
        )
        .is_err());
    }

    #[test]
    fn erode_labels_separates_touching_instances() {
        // two 5x5 squares sharing an edge
        let labels: Vec<u32> = (0..5 * 10)
            .map(|i| if i % 10 < 5 { 1 } else { 2 })
            .collect();
        let lm = LabelMap::new(10, 5, labels).unwrap();
        let out = erode_labels(&lm, StructuringElement::Square3, 1);
        assert_eq!(out.component_count(), 2);
        assert_eq!(out.areas()[1..], [9, 9]);
        assert_eq!(
            erode_labels(&lm, StructuringElement::Square3, 3).component_count(),
            0
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn edt_matches_brute_force(m in arb_mask(24)) {
            let f = edt(&m);
            for r in 0..m.height() {
                for c in 0..m.width() {
                    prop_assert!((f.get(r, c) - brute_edt(&m, r, c)).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn erosion_laws(m in arb_mask(20), a in 0usize..4, b in 0usize..4) {
            for se in [StructuringElement::Square3, StructuringElement::Cross3] {
                let e = erode(&m, se, a);
                prop_assert!(e.is_subset_of(&m));
                prop_assert!(m.is_subset_of(&dilate(&m, se, a)));
                prop_assert_eq!(erode(&e, se, b), erode(&m, se, a + b));
            }
        }

        #[test]
        fn dilation_is_dual_of_erosion(m in arb_mask(16), k in 0usize..4) {
            // Erosion treats the frame exterior as background, which the
            // complement flips, so duality only holds k or more pixels in.
            let pad = k;
            let (w, h) = (m.width() + 2 * pad, m.height() + 2 * pad);
            let big = BinaryMask::from_fn(w, h, |r, c| {
                r >= pad && c >= pad && r < h - pad && c < w - pad && m.get(r - pad, c - pad)
            });
            for se in [StructuringElement::Square3, StructuringElement::Cross3] {
                let dual = erode(&big.complement(), se, k).complement();
                let dil = dilate(&big, se, k);
                for r in pad..h - pad {
                    for c in pad..w - pad {
                        prop_assert_eq!(dual.get(r, c), dil.get(r, c), "({}, {})", r, c);
                    }
                }
            }
        }

        #[test]
        fn flat_red_round_trips_through_binarize(m in arb_mask(20)) {
            let lm = components::label(&m, Connectivity::Eight);
            let img = make_ground_truth(&lm, GroundTruthMode::FlatRed).unwrap();
            prop_assert_eq!(binarize(&img, &BinarizePolicy::red_dominant(127)).unwrap(), m);
        }
    }
}
