//! Optical and spin observables: zero-phonon line, radiative lifetime,
//! hyperfine tensors and strain-calibration regressions.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{si, StrainSeries};

/// Zero-phonon line from the two relaxed minima (eV). Sign is left to the caller.
pub fn zpl(e_exc_min: f64, e_gs_min: f64) -> f64 {
    e_exc_min - e_gs_min
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiativeInput {
    /// Emission energy, eV.
    pub e_zpl: f64,
    pub refractive_index: f64,
    /// Transition dipole, Debye.
    pub mu: f64,
}

impl RadiativeInput {
    pub fn new(e_zpl: f64, refractive_index: f64, mu: f64) -> Result<Self> {
        let inp = RadiativeInput {
            e_zpl,
            refractive_index,
            mu,
        };
        inp.validate()?;
        Ok(inp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_zpl > 0.0) || !self.e_zpl.is_finite() {
            return Err(Error::Validation(format!("emission energy must be positive, got {}", self.e_zpl)));
        }
        if !(self.refractive_index >= 1.0) || !self.refractive_index.is_finite() {
            return Err(Error::Validation(format!(
                "refractive index must be at least 1, got {}",
                self.refractive_index
            )));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::Validation(format!("dipole must be non-negative, got {}", self.mu)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiativeRate {
    /// Spontaneous emission rate, 1/s.
    pub gamma: f64,
    /// Lifetime in ns; `None` when the rate vanishes.
    pub tau_ns: Option<f64>,
}

impl RadiativeRate {
    pub fn is_infinite(&self) -> bool {
        self.tau_ns.is_none()
    }
}

/// Gamma = n w^3 mu^2 / (3 pi eps0 hbar c^3) in SI units.
pub fn radiative_rate(inp: &RadiativeInput) -> Result<RadiativeRate> {
    inp.validate()?;
    let omega = inp.e_zpl * si::ELEMENTARY_CHARGE / si::HBAR;
    let mu = inp.mu * si::DEBYE;
    let gamma = inp.refractive_index * omega.powi(3) * mu * mu
        / (3.0 * std::f64::consts::PI * si::EPSILON_0 * si::HBAR * si::SPEED_OF_LIGHT.powi(3));
    Ok(RadiativeRate {
        gamma,
        tau_ns: (gamma > 0.0).then(|| 1e9 / gamma),
    })
}

/// Comparison of a computed lifetime with an externally quoted one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeCheck {
    pub reference_ns: f64,
    pub relative_deviation: f64,
    pub discrepant: bool,
}

pub fn check_lifetime(rate: &RadiativeRate, reference_ns: f64, rel_tol: f64) -> LifetimeCheck {
    let relative_deviation = match rate.tau_ns {
        Some(tau) => (tau - reference_ns) / reference_ns,
        None => f64::INFINITY,
    };
    LifetimeCheck {
        reference_ns,
        relative_deviation,
        discrepant: !(relative_deviation.abs() <= rel_tol),
    }
}

/// Rounds to three significant figures for reporting.
pub fn three_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let digits = 2 - x.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits);
    (x * scale).round() / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperfineTensor {
    /// Symmetric coupling tensor, MHz.
    pub a: [[f64; 3]; 3],
    /// Unit vector along the defect symmetry axis.
    pub axis: [f64; 3],
}

/// [1, 1, 1] / sqrt(3).
pub const DEFAULT_AXIS: [f64; 3] = [0.577_350_269_189_625_8; 3];

impl HyperfineTensor {
    /// Rejects tensors with asymmetry above 1e-9 MHz; normalizes `axis`.
    pub fn new(a: [[f64; 3]; 3], axis: [f64; 3]) -> Result<Self> {
        if a.iter().flatten().chain(&axis).any(|v| !v.is_finite()) {
            return Err(Error::Validation("hyperfine tensor contains non-finite values".into()));
        }
        let asym = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| (a[i][j] - a[j][i]).abs())
            .fold(0.0, f64::max);
        if asym >= 1e-9 {
            return Err(Error::Validation(format!("hyperfine tensor is not symmetric (deviation {asym:e} MHz)")));
        }
        let norm = Vector3::from(axis).norm();
        if norm == 0.0 {
            return Err(Error::Validation("defect axis must be non-zero".into()));
        }
        Ok(HyperfineTensor {
            a,
            axis: axis.map(|v| v / norm),
        })
    }

    /// Axial tensor with the unique value along `principal`.
    pub fn axial(a_par: f64, a_perp: f64, principal: [f64; 3], axis: [f64; 3]) -> Result<Self> {
        let u = Vector3::from(principal).normalize();
        let m = Matrix3::identity() * a_perp + u * u.transpose() * (a_par - a_perp);
        HyperfineTensor::new(std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)])), axis)
    }

    fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.a[i][j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialHf {
    pub a_par: f64,
    pub a_perp: f64,
    /// Tilt of the principal axis from the defect axis, degrees in [0, 90].
    pub theta_deg: f64,
    pub principal_axis: [f64; 3],
    pub isotropic: bool,
}

/// Principal values closer than this (relative) count as isotropic.
const ISOTROPY_TOL: f64 = 1e-12;

pub fn hf_principal(t: &HyperfineTensor) -> AxialHf {
    let eig = SymmetricEigen::new(t.matrix());
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.map(|i| eig.eigenvalues[i]);
    let scale = vals.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if vals[2] - vals[0] <= ISOTROPY_TOL * scale {
        let mean = vals.iter().sum::<f64>() / 3.0;
        return AxialHf {
            a_par: mean,
            a_perp: mean,
            theta_deg: 0.0,
            principal_axis: t.axis,
            isotropic: true,
        };
    }
    // Distance from the median; ties go to the largest value.
    let median = vals[1];
    let unique = if (vals[0] - median).abs() > (vals[2] - median).abs() { 0 } else { 2 };
    let others: f64 = (0..3).filter(|&i| i != unique).map(|i| vals[i]).sum::<f64>() / 2.0;
    let v: Vector3<f64> = eig.eigenvectors.column(order[unique]).into_owned();
    let axis = Vector3::from(t.axis);
    let theta = v.cross(&axis).norm().atan2(v.dot(&axis).abs()).to_degrees();
    let sign = if v.dot(&axis) < 0.0 { -1.0 } else { 1.0 };
    AxialHf {
        a_par: vals[unique],
        a_perp: others,
        theta_deg: theta,
        principal_axis: [v[0] * sign, v[1] * sign, v[2] * sign],
        isotropic: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HfLevels {
    /// Ascending, MHz.
    pub energies: [f64; 6],
    /// (energy, multiplicity) after merging values within 1e-9 relative.
    pub multiplets: Vec<(f64, usize)>,
}

/// Zero-field levels of A_par Sz Iz + A_perp (Sx Ix + Sy Iy) for S = 1, I = 1/2.
///
/// The operator conserves m_s + m_I, leaving two singlets at A_par/2 and two
/// identical 2x2 blocks with eigenvalues -A_par/4 +- sqrt(A_par^2/16 + A_perp^2/2).
pub fn hf_levels(a_par: f64, a_perp: f64) -> HfLevels {
    let root = (a_par * a_par / 16.0 + a_perp * a_perp / 2.0).sqrt();
    let mut energies = [
        a_par / 2.0,
        a_par / 2.0,
        -a_par / 4.0 + root,
        -a_par / 4.0 + root,
        -a_par / 4.0 - root,
        -a_par / 4.0 - root,
    ];
    energies.sort_by(f64::total_cmp);
    let scale = energies.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let mut multiplets: Vec<(f64, usize)> = Vec::new();
    for &e in &energies {
        match multiplets.last_mut() {
            Some((first, count)) if (e - *first).abs() <= 1e-9 * scale => *count += 1,
            _ => multiplets.push((e, 1)),
        }
    }
    HfLevels { energies, multiplets }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub points: usize,
}

/// Ordinary least squares y = slope * x + intercept.
pub fn linear_calibration(s: &StrainSeries) -> Result<Calibration> {
    let pts = s.points();
    if pts.len() < 2 {
        return Err(Error::Validation(format!("calibration needs at least 2 points, got {}", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Validation("all abscissae are identical".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = pts.iter().map(|p| p.1 - (slope * p.0 + intercept)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(Calibration {
        slope,
        intercept,
        r_squared,
        residuals,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::AxisKind;
    use nalgebra::{DMatrix, Rotation3, Unit};

    #[test]
    fn zpl_is_a_difference() {
        assert_eq!(zpl(2.0, 0.5), 1.5);
        assert_eq!(zpl(0.7, 0.7), 0.0);
        assert_eq!(zpl(0.3, 1.1), -zpl(1.1, 0.3));
    }

    #[test]
    fn lifetime_scaling_laws() {
        let base = radiative_rate(&RadiativeInput::new(1.35, 2.42, 4.8).unwrap()).unwrap().gamma;
        let g = |e, n, mu| radiative_rate(&RadiativeInput::new(e, n, mu).unwrap()).unwrap().gamma;
        assert!((g(2.7, 2.42, 4.8) / base - 8.0).abs() < 1e-12);
        assert!((g(1.35, 4.84, 4.8) / base - 2.0).abs() < 1e-12);
        assert!((g(1.35, 2.42, 9.6) / base - 4.0).abs() < 1e-12);
        let dark = radiative_rate(&RadiativeInput::new(1.35, 2.42, 0.0).unwrap()).unwrap();
        assert_eq!(dark.gamma, 0.0);
        assert!(dark.is_infinite());
        assert!(RadiativeInput::new(1.35, 0.9, 1.0).is_err());
        assert!(RadiativeInput::new(0.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn lifetime_check_flags_large_deviation() {
        let r = RadiativeRate {
            gamma: 1e7,
            tau_ns: Some(100.0),
        };
        assert!(!check_lifetime(&r, 100.5, 0.01).discrepant);
        assert!(check_lifetime(&r, 80.0, 0.01).discrepant);
        assert_eq!(three_sig(44.3512), 44.4);
        assert_eq!(three_sig(0.012345), 0.0123);
    }

    fn dense_levels(a_par: f64, a_perp: f64) -> Vec<f64> {
        // S = 1 and I = 1/2 matrices in |m_s> (x) |m_I> ordering.
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let sx = DMatrix::from_row_slice(3, 3, &[0.0, r, 0.0, r, 0.0, r, 0.0, r, 0.0]);
        let sz = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        // Sy is imaginary; Sy (x) Iy is real: (-i)(-i) signs collected by hand.
        let sy_im = DMatrix::from_row_slice(3, 3, &[0.0, -r, 0.0, r, 0.0, -r, 0.0, r, 0.0]);
        let ix = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        let iz = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.5]);
        let iy_im = DMatrix::from_row_slice(2, 2, &[0.0, -0.5, 0.5, 0.0]);
        let h = sz.kronecker(&iz) * a_par + (sx.kronecker(&ix) - sy_im.kronecker(&iy_im)) * a_perp;
        let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn hf_levels_match_dense_oracle() {
        for (ap, ae) in [(66.9, 28.5), (96.8, 94.1), (-5.0, 12.0), (10.0, 0.0)] {
            let got = hf_levels(ap, ae);
            for (a, b) in got.energies.iter().zip(dense_levels(ap, ae)) {
                assert!((a - b).abs() < 1e-10, "{ap},{ae}: {a} vs {b}");
            }
            assert!(got.energies.iter().sum::<f64>().abs() < 1e-9);
        }
    }

    #[test]
    fn isotropic_and_diagonal_limits() {
        let a = 40.0;
        let l = hf_levels(a, a);
        assert_eq!(l.multiplets.len(), 2);
        assert!((l.multiplets[0].0 + a).abs() < 1e-12 && l.multiplets[0].1 == 2);
        assert!((l.multiplets[1].0 - a / 2.0).abs() < 1e-12 && l.multiplets[1].1 == 4);
        let d = hf_levels(8.0, 0.0);
        let m: Vec<_> = d.multiplets.iter().map(|m| m.1).collect();
        assert_eq!(m, vec![2, 2, 2]);
        assert!((d.energies[0] + 4.0).abs() < 1e-12 && (d.energies[5] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn principal_axis_of_axial_tensor() {
        let t = HyperfineTensor::new(
            [[94.1, 0.0, 0.0], [0.0, 94.1, 0.0], [0.0, 0.0, 96.8]],
            [0.0, 0.0, 1.0],
        )
        .unwrap();
        let p = hf_principal(&t);
        assert!((p.a_par - 96.8).abs() < 1e-12 && (p.a_perp - 94.1).abs() < 1e-12);
        assert!(p.theta_deg.abs() < 1e-9 && !p.isotropic);
    }

    #[test]
    fn tilted_tensor_round_trip() {
        let axis = Vector3::new(1.0, 1.0, 1.0).normalize();
        let perp = Unit::new_normalize(axis.cross(&Vector3::new(1.0, -1.0, 0.0)));
        let tilted = Rotation3::from_axis_angle(&perp, 34.6f64.to_radians()) * axis;
        let t = HyperfineTensor::axial(66.9, 28.5, tilted.into(), axis.into()).unwrap();
        let p = hf_principal(&t);
        assert!((p.theta_deg - 34.6).abs() < 1e-9);
        assert!((p.a_par - 66.9).abs() < 1e-9 && (p.a_perp - 28.5).abs() < 1e-9);
    }

    #[test]
    fn isotropic_tensor_is_flagged() {
        let t = HyperfineTensor::new([[5.0, 0.0, 0.0], [0.0, 5.0, 0.0], [0.0, 0.0, 5.0]], DEFAULT_AXIS).unwrap();
        let p = hf_principal(&t);
        assert!(p.isotropic && p.a_par == p.a_perp && p.theta_deg == 0.0);
        assert!(HyperfineTensor::new([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], DEFAULT_AXIS).is_err());
        assert!((Vector3::from(DEFAULT_AXIS).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn calibration_linear_data() {
        let s = StrainSeries::new(AxisKind::PressureGpa, "eV", (0..5).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect()).unwrap();
        let c = linear_calibration(&s).unwrap();
        assert!((c.slope - 2.0).abs() < 1e-12 && (c.intercept - 1.0).abs() < 1e-12);
        assert!((c.r_squared - 1.0).abs() < 1e-12);
        let one = StrainSeries::new(AxisKind::PressureGpa, "eV", vec![(0.0, 1.0)]).unwrap();
        assert!(linear_calibration(&one).is_err());
    }
}
