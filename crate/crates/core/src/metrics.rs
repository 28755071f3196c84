//! Segmentation and counting scores.
//!
//! Pixel metrics come from a confusion tally of two masks. Counting scores
//! come from matching predicted components against ground-truth instances:
//! a predicted cluster covering several logs counts every one of them as an
//! intersection, so a merge of two logs contributes 2 to `i`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, LabelMap};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelScores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub kappa: f64,
    pub iou: f64,
}

pub fn confusion(pred: &BinaryMask, gt: &BinaryMask) -> Result<ConfusionCounts> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::invalid(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Observed and chance agreement used by Cohen's kappa.
pub fn agreement(c: &ConfusionCounts) -> (f64, f64) {
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    let total = tp + tn + fp + fn_;
    let observed = (tp + tn) / total;
    let chance = ((tp + fn_) * (tp + fp) + (fp + tn) * (fn_ + tn)) / (total * total);
    (observed, chance)
}

pub fn pixel_scores(c: &ConfusionCounts) -> Result<PixelScores> {
    if c.total() == 0 {
        return Err(Error::invalid("cannot score an empty confusion tally"));
    }
    let (tp, fp, fn_) = (c.tp as f64, c.fp as f64, c.fn_ as f64);
    let (observed, chance) = agreement(c);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let kappa = if chance == 1.0 {
        if c.fp == 0 && c.fn_ == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        (observed - chance) / (1.0 - chance)
    };
    Ok(PixelScores {
        accuracy: observed,
        precision,
        recall,
        f1: ratio(2.0 * precision * recall, precision + recall),
        kappa,
        iou: ratio(tp, tp + fp + fn_),
    })
}

/// Correctly identified, non-identified, intersecting, and noise counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountTally {
    pub ci: u32,
    pub e: u32,
    pub i: u32,
    pub n: u32,
}

impl CountTally {
    pub fn new(ci: u32, e: u32, i: u32, n: u32) -> Result<Self> {
        if i == 1 {
            return Err(Error::invalid(
                "an intersection involves at least two logs, so i can never be 1",
            ));
        }
        Ok(Self { ci, e, i, n })
    }
}

/// Intersection-sensitive score `ci / (ci + e + i + n)`.
pub fn iss(t: &CountTally) -> Result<f64> {
    let den = t.ci as u64 + t.e as u64 + t.i as u64 + t.n as u64;
    if den == 0 {
        return Err(Error::invalid("ISS is undefined for an all-zero tally"));
    }
    Ok(t.ci as f64 / den as f64)
}

/// Log-level accuracy `ci / (ci + e + n)`.
pub fn accuracy_logs(t: &CountTally) -> Result<f64> {
    let den = t.ci as u64 + t.e as u64 + t.n as u64;
    if den == 0 {
        return Err(Error::invalid(
            "log accuracy is undefined when ci + e + n == 0",
        ));
    }
    Ok(t.ci as f64 / den as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    /// A cluster contains a log when it covers at least this fraction of it.
    pub coverage_tau: f64,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self { coverage_tau: 0.5 }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.coverage_tau > 0.0 && self.coverage_tau <= 1.0) {
            return Err(Error::invalid(format!(
                "coverage_tau must be in (0, 1], got {}",
                self.coverage_tau
            )));
        }
        Ok(())
    }
}

/// How one predicted component was classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    Correct,
    Intersection,
    Noise,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredAssignment {
    pub pred_label: u32,
    pub kind: MatchKind,
    /// Ground-truth labels this cluster was credited with, ascending.
    pub gt_labels: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub tally: CountTally,
    pub assignments: Vec<PredAssignment>,
    /// Ground-truth instances no cluster was credited with.
    pub missed: Vec<u32>,
}

/// Matches predicted clusters to ground-truth logs by coverage.
///
/// Each log is credited to the one cluster covering at least `coverage_tau`
/// of it with the largest overlap (lowest predicted label on ties). A
/// cluster credited with one log is correct, with `k >= 2` logs adds `k` to
/// `i`, and with none adds one noise. Uncredited logs are `e`.
pub fn match_instances(
    pred: &LabelMap,
    gt: &LabelMap,
    params: &MatchParams,
) -> Result<MatchResult> {
    params.validate()?;
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::invalid(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    let gt_area = gt.areas();
    let mut overlap: HashMap<(u32, u32), u64> = HashMap::new();
    for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
        if p != 0 && g != 0 {
            *overlap.entry((g, p)).or_default() += 1;
        }
    }

    // best cluster per log: (overlap, pred label)
    let mut owner: Vec<Option<(u64, u32)>> = vec![None; gt_area.len()];
    for (&(g, p), &count) in &overlap {
        let covers = count as f64 / gt_area[g as usize] as f64 >= params.coverage_tau;
        if !covers {
            continue;
        }
        let slot = &mut owner[g as usize];
        let better = match *slot {
            None => true,
            Some((best, best_p)) => count > best || (count == best && p < best_p),
        };
        if better {
            *slot = Some((count, p));
        }
    }

    let mut credited: Vec<Vec<u32>> = vec![Vec::new(); pred.component_count() as usize + 1];
    let mut missed = Vec::new();
    for (g, slot) in owner.iter().enumerate().skip(1) {
        match *slot {
            Some((_, p)) => credited[p as usize].push(g as u32),
            None => missed.push(g as u32),
        }
    }

    let mut tally = CountTally {
        e: missed.len() as u32,
        ..CountTally::default()
    };
    let assignments = credited
        .into_iter()
        .enumerate()
        .skip(1)
        .map(|(p, gt_labels)| {
            let kind = match gt_labels.len() {
                0 => {
                    tally.n += 1;
                    MatchKind::Noise
                }
                1 => {
                    tally.ci += 1;
                    MatchKind::Correct
                }
                k => {
                    tally.i += k as u32;
                    MatchKind::Intersection
                }
            };
            PredAssignment {
                pred_label: p as u32,
                kind,
                gt_labels,
            }
        })
        .collect();
    Ok(MatchResult {
        tally,
        assignments,
        missed,
    })
}
