//! One-dimensional cuts of the adiabatic potential energy surface and the
//! least-squares fits that extract model parameters from sampled cuts.

use std::fs;
use std::path::Path;

use nalgebra::{Matrix4, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, LmOptions, LmOutcome};
use crate::units::{oscillator_length, parse_err, parse_field, Mev, PjtParams};
use crate::vibronic::hamiltonian::electronic_splitting;

/// Sampled cut: energies of up to four branches at each coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApesScan {
    /// Mass-weighted coordinate in Angstrom * sqrt(amu), strictly increasing.
    pub q: Vec<f64>,
    /// `branches[i][c]` is data column `c` at `q[i]` in meV; `None` marks a gap.
    pub branches: Vec<Vec<Option<f64>>>,
    /// Sorted model branch matched to each data column. Defaults to the
    /// column position.
    pub branch_ids: Option<Vec<usize>>,
}

impl ApesScan {
    pub fn new(q: Vec<f64>, branches: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let scan = ApesScan {
            q,
            branches,
            branch_ids: None,
        };
        scan.validate()?;
        Ok(scan)
    }

    /// Single-branch scan.
    pub fn from_curve(q: Vec<f64>, energies: Vec<f64>) -> Result<Self> {
        let branches = energies.into_iter().map(|e| vec![Some(e)]).collect();
        ApesScan::new(q, branches)
    }

    pub fn with_branch_ids(mut self, ids: Vec<usize>) -> Result<Self> {
        self.branch_ids = Some(ids);
        self.validate()?;
        Ok(self)
    }

    pub fn columns(&self) -> usize {
        self.branches.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn branch_of(&self, column: usize) -> usize {
        self.branch_ids.as_ref().map_or(column, |ids| ids[column])
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.len() != self.branches.len() {
            return Err(Error::Shape(format!(
                "{} coordinates but {} energy rows",
                self.q.len(),
                self.branches.len()
            )));
        }
        if self.q.windows(2).any(|w| !(w[1] > w[0])) || self.q.iter().any(|q| !q.is_finite()) {
            return Err(Error::Validation("scan coordinates must be finite and strictly increasing".into()));
        }
        for row in &self.branches {
            if row.len() > 4 || row.iter().flatten().any(|e| !e.is_finite()) {
                return Err(Error::Validation("each scan row needs at most four finite energies".into()));
            }
        }
        if let Some(ids) = &self.branch_ids {
            if ids.len() < self.columns() || ids.iter().any(|&b| b > 3) {
                return Err(Error::Validation("branch ids must name a branch 0..=3 for every column".into()));
            }
        }
        Ok(())
    }

    /// Reads `q_angsqrtamu,e1_mev[,e2_mev,e3_mev,e4_mev]`; empty cells are gaps.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| parse_err(path, 0, "header", e.to_string()))?
            .clone();
        if headers.len() < 2 || headers.len() > 5 {
            return Err(parse_err(path, 0, "header", "expected q plus one to four branch columns".into()));
        }
        let mut q = Vec::new();
        let mut branches = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| parse_err(path, row, "record", e.to_string()))?;
            q.push(parse_field(path, row, &headers[0], rec.get(0).unwrap_or(""))?);
            let mut energies = Vec::with_capacity(headers.len() - 1);
            for c in 1..headers.len() {
                let raw = rec.get(c).unwrap_or("");
                energies.push(if raw.is_empty() {
                    None
                } else {
                    Some(parse_field(path, row, &headers[c], raw)?)
                });
            }
            branches.push(energies);
        }
        ApesScan::new(q, branches)
    }
}

/// The four adiabatic branches of the product Jahn-Teller model along the
/// X direction of the phonon doublet, each sorted ascending per point.
///
/// At coordinate q the electronic matrix is
/// (hbar w / 2) x^2 + x (F_u sz.s0 + F_g s0.sz) + G x^2 (sz.s0 + s0.sz) + W
/// with x = q / l and l the oscillator length.
pub fn apes_cut(p: &PjtParams, q_grid: &[f64]) -> Result<[Vec<f64>; 4]> {
    let l = oscillator_length(p.hbar_omega)?;
    let w = electronic_splitting(p.lambda.0, p.xi.0);
    let mut out: [Vec<f64>; 4] = Default::default();
    for &q in q_grid {
        if !q.is_finite() {
            return Err(Error::Domain(format!("non-finite coordinate {q}")));
        }
        let x = q / l;
        let sz_u = [1.0, 1.0, -1.0, -1.0];
        let sz_g = [1.0, -1.0, 1.0, -1.0];
        let mut h: Matrix4<f64> = w;
        for e in 0..4 {
            h[(e, e)] += 0.5 * p.hbar_omega.0 * x * x
                + x * (p.f_u.0 * sz_u[e] + p.f_g.0 * sz_g[e])
                + p.quad_g.0 * x * x * (sz_u[e] + sz_g[e]);
        }
        let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        for (b, v) in e.into_iter().enumerate() {
            out[b].push(v);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    pub uncertainty: f64,
    pub free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub parameters: Vec<FitParameter>,
    /// Root-mean-square residual in meV.
    pub rms_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub data_points: usize,
    pub starts: usize,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

/// Which pJT parameters are held fixed during a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrozenMask {
    pub f_g: bool,
    pub f_u: bool,
    pub hbar_omega: bool,
    pub lambda: bool,
    pub xi: bool,
    pub quad_g: bool,
}

impl Default for FrozenMask {
    /// Everything free except the quadratic coupling.
    fn default() -> Self {
        FrozenMask {
            f_g: false,
            f_u: false,
            hbar_omega: false,
            lambda: false,
            xi: false,
            quad_g: true,
        }
    }
}

const PJT_NAMES: [&str; 6] = ["f_g_mev", "f_u_mev", "hbar_omega_mev", "lambda_mev", "xi_mev", "quad_g_mev"];

impl FrozenMask {
    fn frozen(&self) -> [bool; 6] {
        [self.f_g, self.f_u, self.hbar_omega, self.lambda, self.xi, self.quad_g]
    }
}

fn pjt_vector(p: &PjtParams) -> [f64; 6] {
    [p.f_g.0, p.f_u.0, p.hbar_omega.0, p.lambda.0, p.xi.0, p.quad_g.0]
}

fn pjt_from(base: &PjtParams, v: &[f64; 6]) -> PjtParams {
    let mut p = *base;
    p.f_g = Mev(v[0]);
    p.f_u = Mev(v[1]);
    p.hbar_omega = Mev(v[2]);
    p.lambda = Mev(v[3]);
    p.xi = Mev(v[4]);
    p.quad_g = Mev(v[5]);
    p
}

/// Number of independent restarts in [`fit_pjt`], the unperturbed guess
/// included.
pub const PJT_STARTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub seed: u64,
    pub starts: usize,
    /// Relative spread of the perturbed starting points.
    pub spread: f64,
    pub lm: LmOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            seed: 0x5eed,
            starts: PJT_STARTS,
            spread: 0.1,
            lm: LmOptions::default(),
        }
    }
}

/// Fits the pJT model to a sampled cut.
///
/// The cut depends on the two couplings only through F_g + F_u and
/// |F_g - F_u|, so the larger fitted coupling is reported as F_g.
pub fn fit_pjt(scan: &ApesScan, init: &PjtParams, frozen: &FrozenMask, opts: &FitOptions) -> Result<(PjtParams, FitResult)> {
    scan.validate()?;
    init.validate()?;
    let frozen = frozen.frozen();
    let free: Vec<usize> = (0..6).filter(|&i| !frozen[i]).collect();
    let values = scan.branches.iter().flatten().flatten().count();
    if scan.q.len() < free.len() || values < free.len() {
        return Err(Error::Underdetermined {
            points: scan.q.len().min(values),
            parameters: free.len(),
        });
    }
    let base = pjt_vector(init);
    let residual = |x: &[f64]| -> Result<Vec<f64>> {
        let mut v = base;
        for (&i, &xi) in free.iter().zip(x) {
            v[i] = xi;
        }
        let p = pjt_from(init, &v);
        if !(p.hbar_omega.0 > 0.0) {
            return Err(Error::Domain("trial phonon energy is not positive".into()));
        }
        let model = apes_cut(&p, &scan.q)?;
        let mut r = Vec::with_capacity(values);
        for (i, row) in scan.branches.iter().enumerate() {
            for (c, e) in row.iter().enumerate() {
                if let Some(e) = e {
                    r.push(model[scan.branch_of(c)][i] - e);
                }
            }
        }
        Ok(r)
    };

    let x0: Vec<f64> = free.iter().map(|&i| base[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vec<f64>> = (0..opts.starts.max(1))
        .map(|s| {
            if s == 0 {
                x0.clone()
            } else {
                x0.iter()
                    .map(|&v| {
                        let f = 1.0 + opts.spread * (2.0 * rng.random::<f64>() - 1.0);
                        if v == 0.0 {
                            opts.spread * (2.0 * rng.random::<f64>() - 1.0)
                        } else {
                            v * f
                        }
                    })
                    .collect()
            }
        })
        .collect();
    let outcomes: Vec<Result<LmOutcome>> = starts
        .par_iter()
        .map(|x| levenberg_marquardt(&residual, x, &opts.lm))
        .collect();
    let best = pick_best(outcomes)?;

    let mut v = base;
    for (&i, &xi) in free.iter().zip(&best.x) {
        v[i] = xi;
    }
    let sigma = best.uncertainties();
    let mut sig6 = [0.0; 6];
    for (&i, &s) in free.iter().zip(&sigma) {
        sig6[i] = s;
    }
    v[0] = v[0].abs();
    v[1] = v[1].abs();
    if v[1] > v[0] {
        v.swap(0, 1);
        sig6.swap(0, 1);
    }
    let fitted = pjt_from(init, &v);
    fitted.validate()?;
    let parameters = (0..6)
        .map(|i| FitParameter {
            name: PJT_NAMES[i].to_string(),
            value: v[i],
            uncertainty: sig6[i],
            free: !frozen[i],
        })
        .collect();
    Ok((
        fitted,
        FitResult {
            parameters,
            rms_residual: best.rms(),
            iterations: best.iterations,
            converged: best.converged,
            data_points: values,
            starts: starts.len(),
        },
    ))
}

/// Lowest final cost wins; ties keep the earlier start so the choice does
/// not depend on scheduling.
fn pick_best(outcomes: Vec<Result<LmOutcome>>) -> Result<LmOutcome> {
    let mut best: Option<LmOutcome> = None;
    let mut first_err = None;
    for o in outcomes {
        match o {
            Ok(o) => {
                if best.as_ref().is_none_or(|b| o.cost < b.cost) {
                    best = Some(o);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one start"))
}

/// Symmetric double well V(q) = B ((q/q0)^2 - 1)^2 + offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticWell {
    /// Barrier height V(0) - V(q0), meV.
    pub b: f64,
    /// Position of the minima, Angstrom * sqrt(amu).
    pub q0: f64,
    pub offset: f64,
}

impl QuarticWell {
    pub fn new(b: f64, q0: f64, offset: f64) -> Result<Self> {
        if !(b > 0.0) || !(q0 > 0.0) || !offset.is_finite() {
            return Err(Error::Validation(format!("quartic well needs B > 0 and q0 > 0, got B={b}, q0={q0}")));
        }
        Ok(QuarticWell { b, q0, offset })
    }

    pub fn eval(&self, q: f64) -> f64 {
        let s = (q / self.q0).powi(2) - 1.0;
        self.b * s * s + self.offset
    }

    pub fn barrier(&self) -> f64 {
        self.eval(0.0) - self.eval(self.q0)
    }

    /// Curvature at a minimum, V''(q0) = 8 B / q0^2.
    pub fn curvature(&self) -> f64 {
        8.0 * self.b / (self.q0 * self.q0)
    }
}

/// Fits a symmetric quartic double well to the first branch of a scan.
///
/// With `symmetric_half` the scan covers one side only and is mirrored
/// through q = 0 before fitting.
pub fn fit_quartic_well(scan: &ApesScan, symmetric_half: bool, lm: &LmOptions) -> Result<(QuarticWell, FitResult)> {
    scan.validate()?;
    let mut pts: Vec<(f64, f64)> = scan
        .q
        .iter()
        .zip(&scan.branches)
        .filter_map(|(&q, row)| row.first().copied().flatten().map(|e| (q, e)))
        .collect();
    if symmetric_half {
        if pts.iter().any(|p| p.0 < 0.0) {
            return Err(Error::Validation("a symmetric-half scan must have q >= 0".into()));
        }
        let mirrored: Vec<(f64, f64)> = pts.iter().filter(|p| p.0 > 0.0).map(|&(q, e)| (-q, e)).collect();
        pts.extend(mirrored);
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    if pts.len() < 4 {
        return Err(Error::Underdetermined {
            points: pts.len(),
            parameters: 3,
        });
    }
    let e: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let n = e.len();
    let peak = (1..n - 1)
        .filter(|&i| e[i] >= e[i - 1] && e[i] >= e[i + 1] && (e[i] > e[i - 1] || e[i] > e[i + 1]))
        .filter(|&i| {
            let left = e[..i].iter().copied().fold(f64::INFINITY, f64::min);
            let right = e[i + 1..].iter().copied().fold(f64::INFINITY, f64::min);
            left < e[i] && right < e[i]
        })
        .max_by(|&a, &b| e[a].total_cmp(&e[b]))
        .ok_or_else(|| Error::Validation("scan has no interior maximum; it is not double-well shaped".into()))?;

    let argmin = |range: std::ops::Range<usize>| {
        range.min_by(|&a, &b| e[a].total_cmp(&e[b])).expect("nonempty side")
    };
    let (lo, hi) = (argmin(0..peak), argmin(peak + 1..n));
    let offset0 = e[lo].min(e[hi]);
    let q00 = 0.5 * (pts[lo].0.abs() + pts[hi].0.abs());
    let b0 = e[peak] - offset0;
    if !(q00 > 0.0 && b0 > 0.0) {
        return Err(Error::Validation("could not locate both minima of the double well".into()));
    }

    let residual = |x: &[f64]| -> Result<Vec<f64>> {
        if !(x[1] != 0.0) {
            return Err(Error::Domain("zero well position".into()));
        }
        let w = QuarticWell {
            b: x[0],
            q0: x[1],
            offset: x[2],
        };
        Ok(pts.iter().map(|&(q, v)| w.eval(q) - v).collect())
    };
    let out = levenberg_marquardt(residual, &[b0, q00, offset0], lm)?;
    let well = QuarticWell::new(out.x[0], out.x[1].abs(), out.x[2])?;
    let sigma = out.uncertainties();
    let names = ["b_mev", "q0_angsqrtamu", "offset_mev"];
    let values = [well.b, well.q0, well.offset];
    let parameters = (0..3)
        .map(|i| FitParameter {
            name: names[i].into(),
            value: values[i],
            uncertainty: sigma[i],
            free: true,
        })
        .collect();
    Ok((
        well,
        FitResult {
            parameters,
            rms_residual: out.rms(),
            iterations: out.iterations,
            converged: out.converged,
            data_points: pts.len(),
            starts: 1,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::StrainLabel;

    fn row0() -> PjtParams {
        PjtParams::new(StrainLabel::PressureGpa(0.0), 103.96, 95.61, 77.39, 81.94, 52.52).unwrap()
    }

    fn grid(n: usize, a: f64) -> Vec<f64> {
        (0..n).map(|i| -a + 2.0 * a * i as f64 / (n - 1) as f64).collect()
    }

    /// Closed-form branches: the 4x4 problem splits into two 2x2 blocks.
    fn analytic(p: &PjtParams, q: f64) -> [f64; 4] {
        let l = oscillator_length(p.hbar_omega).unwrap();
        let x = q / l;
        let (lam, xi) = (p.lambda.0, p.xi.0);
        let (s, d) = (p.f_u.0 + p.f_g.0, p.f_u.0 - p.f_g.0);
        let r1 = ((s * x).powi(2) + ((lam + xi) / 2.0).powi(2)).sqrt();
        let r2 = ((d * x).powi(2) + ((lam - xi) / 2.0).powi(2)).sqrt();
        let base = 0.5 * p.hbar_omega.0 * x * x;
        let mut e = [
            base + (lam - xi) / 2.0 + r1,
            base + (lam - xi) / 2.0 - r1,
            base - (lam + xi) / 2.0 + r2,
            base - (lam + xi) / 2.0 - r2,
        ];
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn cut_matches_closed_form() {
        let p = row0();
        let q = grid(33, 1.2);
        let cut = apes_cut(&p, &q).unwrap();
        for (i, &qi) in q.iter().enumerate() {
            let want = analytic(&p, qi);
            for b in 0..4 {
                assert!((cut[b][i] - want[b]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn high_symmetry_point() {
        let cut = apes_cut(&row0(), &[0.0]).unwrap();
        for (b, want) in cut.iter().zip([-81.94, -52.52, -52.52, 81.94]) {
            assert!((b[0] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn lowest_branch_depth_is_jt_energy() {
        let p = PjtParams::new(StrainLabel::PressureGpa(0.0), 100.0, 100.0, 80.0, 0.0, 0.0).unwrap();
        let l = oscillator_length(p.hbar_omega).unwrap();
        // Minimum of (w/2) x^2 - (F_g + F_u) x sits at x = 200/80.
        let cut = apes_cut(&p, &[-2.5 * l, 0.0]).unwrap();
        let e_jt = 200.0f64.powi(2) / (2.0 * 80.0);
        assert!((cut[0][0] - cut[0][1] + e_jt).abs() < 1e-9);
    }

    #[test]
    fn fit_round_trip_and_swap_canonical() {
        let truth = row0();
        let q = grid(41, 1.0);
        let cut = apes_cut(&truth, &q).unwrap();
        let rows = (0..q.len()).map(|i| (0..4).map(|b| Some(cut[b][i])).collect()).collect();
        let scan = ApesScan::new(q, rows).unwrap();
        // Start with the couplings swapped and everything off by several percent.
        let init = PjtParams::new(StrainLabel::PressureGpa(0.0), 90.0, 105.0, 72.0, 85.0, 50.0).unwrap();
        let (fit, res) = fit_pjt(&scan, &init, &FrozenMask::default(), &FitOptions::default()).unwrap();
        for (got, want) in pjt_vector(&fit).iter().zip(pjt_vector(&truth)) {
            assert!((got - want).abs() <= 1e-6 * want.abs().max(1.0), "{got} vs {want}");
        }
        assert!(res.converged && res.rms_residual < 1e-8, "{res:?}");
    }

    #[test]
    fn too_few_points() {
        let scan = ApesScan::new(vec![0.0, 0.1], vec![vec![Some(0.0); 4], vec![Some(1.0); 4]]).unwrap();
        let err = fit_pjt(&scan, &row0(), &FrozenMask::default(), &FitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Underdetermined { points: 2, parameters: 5 }));
    }

    #[test]
    fn quartic_round_trip_and_invariances() {
        let truth = QuarticWell::new(115.0, 0.5, -10.0).unwrap();
        let q = grid(25, 0.8);
        let v: Vec<f64> = q.iter().map(|&x| truth.eval(x)).collect();
        let scan = ApesScan::from_curve(q.clone(), v.clone()).unwrap();
        let (w, _) = fit_quartic_well(&scan, false, &LmOptions::default()).unwrap();
        assert!((w.b - 115.0).abs() < 1e-8 * 115.0);
        assert!((w.q0 - 0.5).abs() < 1e-8 * 0.5);
        assert!((w.offset + 10.0).abs() < 1e-8);
        assert!((w.barrier() - w.b).abs() < 1e-9);

        let half: Vec<usize> = (0..q.len()).filter(|&i| q[i] >= 0.0).collect();
        let scan_half = ApesScan::from_curve(half.iter().map(|&i| q[i]).collect(), half.iter().map(|&i| v[i]).collect()).unwrap();
        let (wh, _) = fit_quartic_well(&scan_half, true, &LmOptions::default()).unwrap();
        assert!((wh.b - 115.0).abs() < 1e-8 * 115.0);
    }

    #[test]
    fn monotone_scan_is_rejected() {
        let q = grid(10, 1.0);
        let v: Vec<f64> = q.iter().map(|x| 3.0 * x).collect();
        let scan = ApesScan::from_curve(q, v).unwrap();
        assert!(matches!(fit_quartic_well(&scan, false, &LmOptions::default()), Err(Error::Validation(_))));
    }

    #[test]
    fn scan_csv_with_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.csv");
        fs::write(&path, "q_angsqrtamu,e1_mev,e2_mev\n-0.1,1.0,2.0\n0.0,0.5,\n0.1,1.0,2.0\n").unwrap();
        let scan = ApesScan::load_csv(&path).unwrap();
        assert_eq!(scan.branches[1], vec![Some(0.5), None]);
        fs::write(&path, "q_angsqrtamu,e1_mev\n0.0,abc\n").unwrap();
        let err = ApesScan::load_csv(&path).unwrap_err();
        assert!(err.to_string().contains("row 1") && err.to_string().contains("e1_mev"));
    }
}
