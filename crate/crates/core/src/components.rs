//! Connected-component labeling and per-component statistics.
//!
//! Counting logs is counting the distinct components of the foreground.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::raster::{BinaryMask, LabelMap};

/// Pixel adjacency: edge neighbors only, or edges and corners.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self, Error> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(Error::InvalidInput(format!(
                "connectivity must be 4 or 8, got {other}"
            ))),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

impl std::fmt::Display for Connectivity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

/// Disjoint-set forest over provisional labels.
struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new() -> Self {
        // slot 0 is the background and never unioned
        Self { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    /// Keeps the smaller id as root.
    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        lo
    }
}

/// Two-pass raster labeling with union-find equivalence resolution.
/// Final labels follow raster order of each component's first pixel.
pub fn label(mask: &BinaryMask, conn: Connectivity) -> LabelMap {
    let (w, h) = (mask.width(), mask.height());
    let src = mask.as_slice();
    let mut prov = vec![0u32; w * h];
    let mut uf = UnionFind::new();

    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if !src[i] {
                continue;
            }
            let mut current = 0u32;
            let mut visit = |n: u32, uf: &mut UnionFind| {
                if n == 0 {
                    return;
                }
                current = if current == 0 {
                    n
                } else {
                    uf.union(current, n)
                };
            };
            if c > 0 {
                visit(prov[i - 1], &mut uf);
            }
            if r > 0 {
                let up = i - w;
                visit(prov[up], &mut uf);
                if conn == Connectivity::Eight {
                    if c > 0 {
                        visit(prov[up - 1], &mut uf);
                    }
                    if c + 1 < w {
                        visit(prov[up + 1], &mut uf);
                    }
                }
            }
            prov[i] = if current == 0 { uf.make() } else { current };
        }
    }

    let mut final_of = vec![0u32; uf.parent.len()];
    let mut next = 0u32;
    for p in prov.iter_mut() {
        if *p == 0 {
            continue;
        }
        let root = uf.find(*p) as usize;
        if final_of[root] == 0 {
            next += 1;
            final_of[root] = next;
        }
        *p = final_of[root];
    }
    LabelMap::from_parts_unchecked(w, h, prov, next)
}

pub fn count_logs(labels: &LabelMap) -> usize {
    labels.component_count() as usize
}

/// Drops components smaller than `min_area` pixels and renumbers the rest
/// in raster order. `min_area == 0` returns the map unchanged.
pub fn filter_components(labels: &LabelMap, min_area: usize) -> LabelMap {
    if min_area == 0 {
        return labels.clone();
    }
    let areas = labels.areas();
    let mut remap = vec![0u32; areas.len()];
    let mut next = 0u32;
    let out = labels
        .as_slice()
        .iter()
        .map(|&l| {
            if l == 0 || areas[l as usize] < min_area {
                return 0;
            }
            let slot = &mut remap[l as usize];
            if *slot == 0 {
                next += 1;
                *slot = next;
            }
            *slot
        })
        .collect();
    LabelMap::from_parts_unchecked(labels.width(), labels.height(), out, next)
}

/// Summary of one labeled component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub label: u32,
    pub area: usize,
    /// Mean pixel position as `[row, col]`.
    pub centroid: [f64; 2],
    /// `[min_row, min_col, max_row, max_col]`, inclusive.
    pub bbox: [usize; 4],
    /// Radius of the disc with the same area.
    pub equivalent_radius: f64,
}

pub fn stats(labels: &LabelMap) -> Vec<ComponentStats> {
    let n = labels.component_count() as usize;
    let w = labels.width();
    let mut acc: Vec<(usize, f64, f64, [usize; 4])> =
        vec![(0, 0.0, 0.0, [usize::MAX, usize::MAX, 0, 0]); n + 1];
    for (i, &l) in labels.as_slice().iter().enumerate() {
        if l == 0 {
            continue;
        }
        let (r, c) = (i / w, i % w);
        let e = &mut acc[l as usize];
        e.0 += 1;
        e.1 += r as f64;
        e.2 += c as f64;
        e.3[0] = e.3[0].min(r);
        e.3[1] = e.3[1].min(c);
        e.3[2] = e.3[2].max(r);
        e.3[3] = e.3[3].max(c);
    }
    acc.into_iter()
        .enumerate()
        .skip(1)
        .map(|(l, (area, sr, sc, bbox))| ComponentStats {
            label: l as u32,
            area,
            centroid: [sr / area as f64, sc / area as f64],
            bbox,
            equivalent_radius: (area as f64 / PI).sqrt(),
        })
        .collect()
}
