//! Cylinder volume per log and pile totals.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::components::ComponentStats;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleCalibration {
    pub pixels_per_meter: f64,
}

impl ScaleCalibration {
    pub fn new(pixels_per_meter: f64) -> Result<Self> {
        if !(pixels_per_meter > 0.0) || !pixels_per_meter.is_finite() {
            return Err(Error::invalid(format!(
                "pixels_per_meter must be positive, got {pixels_per_meter}"
            )));
        }
        Ok(Self { pixels_per_meter })
    }
}

/// Face radius and log depth, both in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDims {
    pub radius: f64,
    pub depth: f64,
}

impl LogDims {
    pub fn new(radius: f64, depth: f64) -> Result<Self> {
        let d = Self { radius, depth };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.radius) || !ok(self.depth) {
            return Err(Error::invalid(format!(
                "log radius and depth must be positive, got r={} c={}",
                self.radius, self.depth
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PileVolume {
    /// Cubic meters.
    pub total: f64,
    pub per_log: Vec<f64>,
    pub log_count: usize,
}

/// `π r² c`
pub fn log_volume(d: &LogDims) -> Result<f64> {
    d.validate()?;
    Ok(PI * d.radius * d.radius * d.depth)
}

pub fn pile_volume(logs: &[LogDims]) -> Result<PileVolume> {
    if logs.is_empty() {
        return Err(Error::invalid("a pile needs at least one log"));
    }
    let per_log = logs.iter().map(log_volume).collect::<Result<Vec<_>>>()?;
    Ok(PileVolume {
        total: per_log.iter().sum(),
        log_count: per_log.len(),
        per_log,
    })
}

/// Equivalent-circle radius in meters for each component, with a uniform
/// depth for the whole pile.
pub fn dims_from_components(
    stats: &[ComponentStats],
    cal: &ScaleCalibration,
    depth_m: f64,
) -> Result<Vec<LogDims>> {
    let cal = ScaleCalibration::new(cal.pixels_per_meter)?;
    if !(depth_m > 0.0) || !depth_m.is_finite() {
        return Err(Error::invalid(format!(
            "depth must be positive, got {depth_m}"
        )));
    }
    stats
        .iter()
        .filter(|s| s.area > 0)
        .map(|s| LogDims::new(s.equivalent_radius / cal.pixels_per_meter, depth_m))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comp(area: usize) -> ComponentStats {
        ComponentStats {
            label: 1,
            area,
            centroid: [0.0, 0.0],
            bbox: [0, 0, 0, 0],
            equivalent_radius: (area as f64 / PI).sqrt(),
        }
    }

    #[test]
    fn log_volume_examples() {
        let v = log_volume(&LogDims::new(1.0, 1.0).unwrap()).unwrap();
        assert!((v - PI).abs() < 1e-12);
        let v = log_volume(&LogDims::new(0.15, 2.4).unwrap()).unwrap();
        assert!((v - 0.169_646_003_3).abs() < 1e-9);
        let base = log_volume(&LogDims::new(0.3, 2.0).unwrap()).unwrap();
        let r2 = log_volume(&LogDims::new(0.6, 2.0).unwrap()).unwrap();
        let c2 = log_volume(&LogDims::new(0.3, 4.0).unwrap()).unwrap();
        assert!((r2 - 4.0 * base).abs() < 1e-12);
        assert!((c2 - 2.0 * base).abs() < 1e-12);
        assert!(LogDims::new(0.0, 1.0).is_err());
        assert!(log_volume(&LogDims {
            radius: 1.0,
            depth: -1.0
        })
        .is_err());
    }

    #[test]
    fn pile_examples() {
        let one = LogDims::new(0.2, 3.0).unwrap();
        let p = pile_volume(&[one; 3]).unwrap();
        assert!((p.total - 3.0 * log_volume(&one).unwrap()).abs() < 1e-12);
        assert_eq!(p.log_count, 3);

        let p = pile_volume(&[
            LogDims::new(1.0, 1.0).unwrap(),
            LogDims::new(2.0, 1.0).unwrap(),
        ])
        .unwrap();
        assert!((p.total - 5.0 * PI).abs() < 1e-9);

        let p = pile_volume(&[one]).unwrap();
        assert_eq!(p.total, log_volume(&one).unwrap());
        assert!(pile_volume(&[]).is_err());
    }

    #[test]
    fn dims_examples() {
        let area = (PI * 100.0 * 100.0).round() as usize;
        let cal = ScaleCalibration::new(100.0).unwrap();
        let d = dims_from_components(&[comp(area)], &cal, 2.0).unwrap();
        assert!((d[0].radius - 1.0).abs() < 1e-4);
        assert_eq!(d[0].depth, 2.0);
        assert!(dims_from_components(&[], &cal, 2.0).unwrap().is_empty());
        assert_eq!(
            dims_from_components(&[comp(0), comp(50)], &cal, 1.0)
                .unwrap()
                .len(),
            1
        );
        assert!(dims_from_components(&[comp(5)], &cal, 0.0).is_err());
        assert!(dims_from_components(
            &[comp(5)],
            &ScaleCalibration {
                pixels_per_meter: 0.0
            },
            1.0
        )
        .is_err());
    }
}
