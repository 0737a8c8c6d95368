//! Charge transition levels with finite-size corrections, and photostability
//! windows of the zero-phonon line against carrier-exchange thresholds.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::StrainSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeStateRecord {
    pub q: i32,
    /// Supercell total energy, eV.
    pub e_tot: f64,
    /// Image-charge correction, eV.
    pub e_el: f64,
    /// Potential alignment, eV.
    pub delta_v: f64,
}

impl ChargeStateRecord {
    pub fn new(q: i32, e_tot: f64, e_el: f64, delta_v: f64) -> Result<Self> {
        if ![e_tot, e_el, delta_v].iter().all(|v| v.is_finite()) {
            return Err(Error::Validation(format!("charge state {q} has non-finite energies")));
        }
        Ok(ChargeStateRecord { q, e_tot, e_el, delta_v })
    }

    fn corrected(&self) -> f64 {
        self.e_tot + fnv_correction(self)
    }
}

/// E_el + q * delta_v.
pub fn fnv_correction(rec: &ChargeStateRecord) -> f64 {
    rec.e_el + rec.q as f64 * rec.delta_v
}

/// Fermi level (above the valence band maximum) where charge states a and b
/// have equal formation energy. Symmetric in its two records.
pub fn transition_level(a: &ChargeStateRecord, b: &ChargeStateRecord, e_vbm: f64) -> Result<f64> {
    if a.q == b.q {
        return Err(Error::Validation(format!("transition level needs two different charges, both are {}", a.q)));
    }
    Ok((a.corrected() - b.corrected()) / (b.q - a.q) as f64 - e_vbm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSeries {
    pub name: String,
    pub series: StrainSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCurves {
    pub zpl: StrainSeries,
    pub thresholds: Vec<NamedSeries>,
}

impl ThresholdCurves {
    pub fn new(zpl: StrainSeries, thresholds: Vec<NamedSeries>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::Validation("at least one threshold curve is required".into()));
        }
        for (name, s) in std::iter::once(("zpl", &zpl)).chain(thresholds.iter().map(|t| (t.name.as_str(), &t.series))) {
            if s.len() < 2 {
                return Err(Error::Validation(format!("curve `{name}` needs at least 2 points")));
            }
            if s.axis != zpl.axis {
                return Err(Error::Validation(format!("curve `{name}` uses a different strain axis")));
            }
        }
        Ok(ThresholdCurves { zpl, thresholds })
    }

    /// Intersection of all abscissa ranges.
    pub fn common_range(&self) -> Result<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for s in std::iter::once(&self.zpl).chain(self.thresholds.iter().map(|t| &t.series)) {
            let (a, b) = s.x_range().expect("validated non-empty");
            lo = lo.max(a);
            hi = hi.min(b);
        }
        if lo >= hi {
            return Err(Error::Validation("curves do not share a common strain interval".into()));
        }
        Ok((lo, hi))
    }

    /// Lowest threshold at x and the index of the curve attaining it.
    fn lowest(&self, x: f64) -> (f64, usize) {
        self.thresholds
            .iter()
            .enumerate()
            .map(|(i, t)| (t.series.interpolate(x).expect("x within common range"), i))
            .fold((f64::INFINITY, 0), |best, cur| if cur.0 < best.0 { cur } else { best })
    }

    /// zpl(x) - lowest threshold(x); negative means photostable.
    fn margin(&self, x: f64) -> f64 {
        self.zpl.interpolate(x).expect("x within common range") - self.lowest(x).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Photostable,
    Unstable,
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::Photostable => "photostable",
            Stability::Unstable => "unstable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub from: f64,
    pub to: f64,
    pub status: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub x: f64,
    /// ZPL energy at the crossing, eV.
    pub energy: f64,
    /// Name of the lowest threshold at the crossing.
    pub threshold: String,
    /// Status on the high-x side.
    pub entering: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotostabilityReport {
    pub windows: Vec<Window>,
    pub crossings: Vec<Crossing>,
}

fn linear_root(a: f64, ga: f64, b: f64, gb: f64) -> f64 {
    a - ga * (b - a) / (gb - ga)
}

/// Tiles the common range into photostable and unstable intervals.
///
/// All curves are piecewise linear, and so is the lowest threshold once
/// threshold-threshold intersections are added as breakpoints. The margin
/// is then linear on every segment and its roots are exact.
pub fn photostability_windows(t: &ThresholdCurves) -> Result<PhotostabilityReport> {
    let (lo, hi) = t.common_range()?;
    let mut breaks: Vec<f64> = std::iter::once(&t.zpl)
        .chain(t.thresholds.iter().map(|s| &s.series))
        .flat_map(|s| s.points().iter().map(|p| p.0))
        .filter(|&x| x > lo && x < hi)
        .chain([lo, hi])
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // Threshold-threshold intersections inside each segment.
    let mut extra = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let vals: Vec<(f64, f64)> = t
            .thresholds
            .iter()
            .map(|s| (s.series.interpolate(a).unwrap(), s.series.interpolate(b).unwrap()))
            .collect();
        for i in 0..vals.len() {
            for j in i + 1..vals.len() {
                let (da, db) = (vals[i].0 - vals[j].0, vals[i].1 - vals[j].1);
                if da * db < 0.0 {
                    extra.push(linear_root(a, da, b, db));
                }
            }
        }
    }
    breaks.extend(extra);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // Points where the margin may change sign.
    let mut cuts = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ga, gb) = (t.margin(a), t.margin(b));
        if ga == 0.0 && a > lo {
            cuts.push(a);
        }
        if ga * gb < 0.0 {
            cuts.push(linear_root(a, ga, b, gb));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let status_at = |x: f64| {
        if t.margin(x) < 0.0 {
            Stability::Photostable
        } else {
            Stability::Unstable
        }
    };
    let edges: Vec<f64> = std::iter::once(lo)
        .chain(cuts.into_iter().filter(|&c| c > lo && c < hi))
        .chain(std::iter::once(hi))
        .collect();
    let mut windows: Vec<Window> = Vec::new();
    for w in edges.windows(2) {
        let status = status_at(0.5 * (w[0] + w[1]));
        match windows.last_mut() {
            Some(last) if last.status == status => last.to = w[1],
            _ => windows.push(Window {
                from: w[0],
                to: w[1],
                status,
            }),
        }
    }
    let crossings = windows
        .windows(2)
        .map(|w| {
            let x = w[1].from;
            let (_, idx) = t.lowest(x);
            Crossing {
                x,
                energy: t.zpl.interpolate(x).unwrap(),
                threshold: t.thresholds[idx].name.clone(),
                entering: w[1].status,
            }
        })
        .collect();
    Ok(PhotostabilityReport { windows, crossings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::AxisKind;

    fn series(points: Vec<(f64, f64)>) -> StrainSeries {
        StrainSeries::new(AxisKind::PressureGpa, "eV", points).unwrap()
    }

    fn named(name: &str, points: Vec<(f64, f64)>) -> NamedSeries {
        NamedSeries {
            name: name.into(),
            series: series(points),
        }
    }

    #[test]
    fn fnv_arithmetic() {
        let r = |q| ChargeStateRecord::new(q, 0.0, 0.10, 0.02).unwrap();
        assert_eq!(fnv_correction(&r(0)), 0.10);
        assert!((fnv_correction(&r(-1)) - 0.08).abs() < 1e-15);
        assert!((fnv_correction(&r(1)) - 0.12).abs() < 1e-15);
    }

    #[test]
    fn transition_level_inverts_and_is_symmetric() {
        // Choose b, then set a so that the level sits 1.00 eV above the VBM.
        let vbm = 4.2;
        let b = ChargeStateRecord::new(-1, -1000.0, 0.3, 0.05).unwrap();
        let target = 1.0;
        let a_corr = b.corrected() + (target + vbm) * b.q as f64;
        let a = ChargeStateRecord::new(0, a_corr - 0.1, 0.1, 0.7).unwrap();
        assert!((transition_level(&a, &b, vbm).unwrap() - target).abs() < 1e-12);
        assert_eq!(transition_level(&a, &b, vbm).unwrap(), transition_level(&b, &a, vbm).unwrap());
        assert!(transition_level(&a, &a, vbm).is_err());
    }

    #[test]
    fn flat_threshold_crossing() {
        let curves = ThresholdCurves::new(
            series(vec![(-40.0, 1.35 - 0.0344), (180.0, 1.35 + 0.00086 * 180.0)]),
            vec![named("affinity", vec![(-50.0, 1.436), (200.0, 1.436)])],
        )
        .unwrap();
        let r = photostability_windows(&curves).unwrap();
        assert_eq!(r.windows.len(), 2);
        assert_eq!(r.windows[0].status, Stability::Photostable);
        assert!((r.crossings[0].x - 100.0).abs() < 1e-9);
        assert_eq!(r.crossings[0].entering, Stability::Unstable);
        assert_eq!((r.windows[0].from, r.windows[1].to), (-40.0, 180.0));
    }

    #[test]
    fn uniform_cases_give_single_interval() {
        let below = ThresholdCurves::new(series(vec![(0.0, 1.0), (10.0, 1.1)]), vec![named("t", vec![(0.0, 2.0), (10.0, 2.0)])]).unwrap();
        let w = photostability_windows(&below).unwrap();
        assert_eq!(w.windows.len(), 1);
        assert_eq!(w.windows[0].status, Stability::Photostable);
        let above = ThresholdCurves::new(series(vec![(0.0, 3.0), (10.0, 3.1)]), vec![named("t", vec![(0.0, 2.0), (10.0, 2.0)])]).unwrap();
        assert_eq!(photostability_windows(&above).unwrap().windows[0].status, Stability::Unstable);
    }

    #[test]
    fn lowest_of_crossing_thresholds() {
        // Two thresholds swap order at x = 5; the ZPL crosses each once.
        let curves = ThresholdCurves::new(
            series(vec![(0.0, 1.5), (10.0, 1.5)]),
            vec![
                named("ionization", vec![(0.0, 1.0), (10.0, 3.0)]),
                named("affinity", vec![(0.0, 3.0), (10.0, 1.0)]),
            ],
        )
        .unwrap();
        let r = photostability_windows(&curves).unwrap();
        let xs: Vec<f64> = r.crossings.iter().map(|c| c.x).collect();
        assert_eq!(r.windows.len(), 3);
        assert!((xs[0] - 2.5).abs() < 1e-12 && (xs[1] - 7.5).abs() < 1e-12);
        assert_eq!(r.crossings[0].threshold, "ionization");
        assert_eq!(r.crossings[1].threshold, "affinity");
        assert_eq!(r.windows[1].status, Stability::Photostable);
    }

    #[test]
    fn disjoint_ranges_are_rejected() {
        let curves = ThresholdCurves::new(series(vec![(0.0, 1.0), (1.0, 1.0)]), vec![named("t", vec![(2.0, 2.0), (3.0, 2.0)])]).unwrap();
        assert!(photostability_windows(&curves).is_err());
        assert!(ThresholdCurves::new(series(vec![(0.0, 1.0)]), vec![named("t", vec![(0.0, 2.0), (3.0, 2.0)])]).is_err());
    }
}
