//! One-dimensional nuclear Schroedinger equation in mass-weighted coordinates.
//!
//! The Hamiltonian -K d^2/dq^2 + V(q), with K = hbar^2 / (2 M) in
//! meV * Angstrom^2 * amu, is discretized by second-order central differences
//! between hard walls at the two grid ends. Eigenvalues come from Sturm
//! bisection on the tridiagonal matrix and eigenvectors from inverse
//! iteration. Symmetric potentials are split into even and odd blocks so
//! that tunneling doublets never have to be separated numerically.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{energy_to_frequency, parse_err, parse_field, Mev, CONSTANTS};

pub const MIN_POINTS: usize = 64;

/// Largest |V(q) - V(-q)| accepted as mirror symmetric, meV.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Edge-to-peak ratio of |psi|^2 above which a state is said to feel the walls.
pub const DECAY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialCurve {
    q: Vec<f64>,
    v: Vec<f64>,
    /// Effective mass in amu.
    mass: f64,
}

impl PotentialCurve {
    /// Uniform grid check: every spacing equals the mean spacing to 1e-12
    /// relative to the coordinate magnitude.
    pub fn new(q: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if q.len() != v.len() {
            return Err(Error::Shape(format!("{} coordinates but {} energies", q.len(), v.len())));
        }
        if q.len() < MIN_POINTS {
            return Err(Error::Validation(format!(
                "potential needs at least {MIN_POINTS} grid points, got {}",
                q.len()
            )));
        }
        if q.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::Validation("potential contains non-finite values".into()));
        }
        let n = q.len();
        let h = (q[n - 1] - q[0]) / (n - 1) as f64;
        if !(h > 0.0) {
            return Err(Error::Validation("grid must be increasing".into()));
        }
        let scale = q[0].abs().max(q[n - 1].abs()).max(h);
        if q.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-12 * scale) {
            return Err(Error::Validation("grid spacing is not uniform".into()));
        }
        Ok(PotentialCurve { q, v, mass: 1.0 })
    }

    /// Samples `f` on `n` uniform points spanning [lo, hi].
    pub fn from_fn(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Validation(format!("potential needs at least {MIN_POINTS} grid points")));
        }
        let h = (hi - lo) / (n - 1) as f64;
        let q: Vec<f64> = (0..n).map(|i| if i == n - 1 { hi } else { lo + h * i as f64 }).collect();
        let v = q.iter().map(|&x| f(x)).collect();
        PotentialCurve::new(q, v)
    }

    /// Overrides the default mass of 1 amu.
    pub fn with_mass(mut self, mass: f64) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Validation(format!("effective mass must be positive, got {mass}")));
        }
        self.mass = mass;
        Ok(self)
    }

    /// Reads `q_angsqrtamu,v_mev`.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| parse_err(path, 0, "header", e.to_string()))?
            .clone();
        if headers.len() != 2 {
            return Err(parse_err(path, 0, "header", "expected `q_angsqrtamu,v_mev`".into()));
        }
        let (mut q, mut v) = (Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| parse_err(path, row, "record", e.to_string()))?;
            q.push(parse_field(path, row, &headers[0], &rec[0])?);
            v.push(parse_field(path, row, &headers[1], &rec[1])?);
        }
        PotentialCurve::new(q, v)
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        (self.q[self.len() - 1] - self.q[0]) / (self.len() - 1) as f64
    }

    /// Kinetic prefactor hbar^2 / (2 M) in meV * Angstrom^2 (amu units folded in).
    pub fn kinetic(&self) -> f64 {
        CONSTANTS.hbar2_over_amu_a2 / (2.0 * self.mass)
    }

    /// max |V(q_i) - V(q_{n-1-i})|.
    pub fn asymmetry(&self) -> f64 {
        let n = self.len();
        (0..n / 2).map(|i| (self.v[i] - self.v[n - 1 - i]).abs()).fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        self.asymmetry() <= SYMMETRY_TOL
    }

    /// Every other grid point, keeping both ends.
    fn coarsened(&self) -> Option<PotentialCurve> {
        if (self.len() - 1) % 2 != 0 {
            return None;
        }
        Some(PotentialCurve {
            q: self.q.iter().step_by(2).copied().collect(),
            v: self.v.iter().step_by(2).copied().collect(),
            mass: self.mass,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Combine the grid with its every-other-point coarsening to cancel the
    /// leading h^2 error.
    pub richardson: bool,
    pub check_decay: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            richardson: true,
            check_decay: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStates {
    /// Ascending, meV.
    pub energies: Vec<f64>,
    /// Unextrapolated eigenvalues on the full grid.
    pub raw_energies: Vec<f64>,
    /// On the full grid including the zero wall values, normalized so that
    /// sum |psi|^2 h = 1.
    pub wavefunctions: Vec<Vec<f64>>,
    /// Set when the potential is mirror symmetric.
    pub parities: Option<Vec<Parity>>,
    pub refined: bool,
    pub warnings: Vec<String>,
}

/// Symmetric tridiagonal matrix: `d` on the diagonal, `e[i]` between rows
/// i and i+1.
struct Tridiagonal {
    d: Vec<f64>,
    e: Vec<f64>,
}

impl Tridiagonal {
    fn len(&self) -> usize {
        self.d.len()
    }

    /// Number of eigenvalues strictly below x (Sturm sequence).
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let off = if i == 0 { 0.0 } else { self.e[i - 1] * self.e[i - 1] / q };
            q = self.d[i] - x - off;
            if q == 0.0 {
                q = -f64::EPSILON * (self.d[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// The k-th smallest eigenvalue (0-based) by bisection.
    fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return mid;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    /// Solves (T - s I) x = b by Gaussian elimination with partial pivoting.
    fn solve_shifted(&self, s: f64, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        if n == 1 {
            let p = self.d[0] - s;
            return vec![b[0] / if p == 0.0 { f64::MIN_POSITIVE } else { p }];
        }
        // Upper-triangular factor with up to two superdiagonals.
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut x = b.to_vec();
        let mut diag = self.d[0] - s;
        let mut sup = self.e[0];
        for i in 0..n - 1 {
            let below = self.e[i];
            let next_diag = self.d[i + 1] - s;
            let next_sup = if i + 2 < n { self.e[i + 1] } else { 0.0 };
            if diag.abs() >= below.abs() {
                let piv = if diag == 0.0 { f64::MIN_POSITIVE } else { diag };
                let m = below / piv;
                u0[i] = piv;
                u1[i] = sup;
                u2[i] = 0.0;
                x[i + 1] -= m * x[i];
                diag = next_diag - m * sup;
                sup = next_sup;
            } else {
                // Swap rows i and i+1.
                let m = diag / below;
                u0[i] = below;
                u1[i] = next_diag;
                u2[i] = next_sup;
                x.swap(i, i + 1);
                x[i + 1] -= m * x[i];
                diag = sup - m * next_diag;
                sup = -m * next_sup;
            }
        }
        u0[n - 1] = if diag == 0.0 { f64::MIN_POSITIVE } else { diag };
        for i in (0..n).rev() {
            let mut acc = x[i];
            if i + 1 < n {
                acc -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                acc -= u2[i] * x[i + 2];
            }
            x[i] = acc / u0[i];
        }
        x
    }

    /// Unit eigenvector for eigenvalue `lambda`, orthogonalized against
    /// `previous` (needed only for accidental near-degeneracies).
    fn eigenvector(&self, lambda: f64, previous: &[Vec<f64>]) -> Vec<f64> {
        let n = self.len();
        let scale = self.d.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let shift = lambda + 1e-13 * scale;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..4 {
            for p in previous {
                let c: f64 = p.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(p).for_each(|(xi, pi)| *xi -= c * pi);
            }
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
            x = self.solve_shifted(shift, &x);
        }
        for p in previous {
            let c: f64 = p.iter().zip(&x).map(|(a, b)| a * b).sum();
            x.iter_mut().zip(p).for_each(|(xi, pi)| *xi -= c * pi);
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        x
    }
}

/// Finite-difference matrix over the interior points.
fn interior_matrix(v: &PotentialCurve) -> Tridiagonal {
    let h = v.spacing();
    let t = v.kinetic() / (h * h);
    let n = v.len();
    Tridiagonal {
        d: v.v[1..n - 1].iter().map(|&x| x + 2.0 * t).collect(),
        e: vec![-t; n - 3],
    }
}

/// Even or odd half-problem of a mirror-symmetric interior matrix. Returns
/// the block and a closure-free description of how to unfold it.
fn parity_block(full: &Tridiagonal, parity: Parity) -> (Tridiagonal, usize, bool) {
    let m = full.len();
    let off = full.e.first().copied().unwrap_or(0.0);
    if m % 2 == 1 {
        let c = (m - 1) / 2;
        match parity {
            Parity::Even => {
                let mut e = full.e[..c].to_vec();
                if c > 0 {
                    e[c - 1] = std::f64::consts::SQRT_2 * off;
                }
                (Tridiagonal { d: full.d[..=c].to_vec(), e }, c, true)
            }
            Parity::Odd => (
                Tridiagonal {
                    d: full.d[..c].to_vec(),
                    e: full.e[..c.saturating_sub(1)].to_vec(),
                },
                c,
                true,
            ),
        }
    } else {
        let c = m / 2;
        let mut d = full.d[..c].to_vec();
        d[c - 1] += match parity {
            Parity::Even => off,
            Parity::Odd => -off,
        };
        (
            Tridiagonal {
                d,
                e: full.e[..c - 1].to_vec(),
            },
            c,
            false,
        )
    }
}

/// Mirrors a half-block eigenvector onto the full interior.
fn unfold(x: &[f64], m: usize, c: usize, centered: bool, parity: Parity) -> Vec<f64> {
    let sign = if parity == Parity::Even { 1.0 } else { -1.0 };
    let mut u = vec![0.0; m];
    if centered {
        for i in 0..c {
            u[i] = x[i];
            u[m - 1 - i] = sign * x[i];
        }
        if parity == Parity::Even {
            u[c] = std::f64::consts::SQRT_2 * x[c];
        }
    } else {
        for i in 0..c {
            u[i] = x[i];
            u[m - 1 - i] = sign * x[i];
        }
    }
    u
}

struct RawStates {
    energies: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    parities: Option<Vec<Parity>>,
}

fn raw_solve(v: &PotentialCurve, n_states: usize, symmetric: bool, want_vectors: bool) -> Result<RawStates> {
    let full = interior_matrix(v);
    let m = full.len();
    if n_states > m {
        return Err(Error::Domain(format!("{n_states} states requested from a {m}-point interior")));
    }
    if !symmetric {
        let energies: Vec<f64> = (0..n_states).map(|k| full.eigenvalue(k)).collect();
        let mut vectors: Vec<Vec<f64>> = Vec::new();
        if want_vectors {
            for (k, &e) in energies.iter().enumerate() {
                let close: Vec<Vec<f64>> = (0..k)
                    .filter(|&j| (energies[j] - e).abs() < 1e-8 * e.abs().max(1.0))
                    .map(|j| vectors[j].clone())
                    .collect();
                vectors.push(full.eigenvector(e, &close));
            }
        }
        return Ok(RawStates {
            energies,
            vectors,
            parities: None,
        });
    }

    let mut states: Vec<(f64, Parity, Vec<f64>)> = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let (block, c, centered) = parity_block(&full, parity);
        for k in 0..n_states.min(block.len()) {
            let e = block.eigenvalue(k);
            let vec = if want_vectors {
                unfold(&block.eigenvector(e, &[]), m, c, centered, parity)
            } else {
                Vec::new()
            };
            states.push((e, parity, vec));
        }
    }
    states.sort_by(|a, b| a.0.total_cmp(&b.0));
    states.truncate(n_states);
    Ok(RawStates {
        energies: states.iter().map(|s| s.0).collect(),
        parities: Some(states.iter().map(|s| s.1).collect()),
        vectors: states.into_iter().map(|s| s.2).collect(),
    })
}

/// Lowest `n_states` eigenpairs of the nuclear Hamiltonian on the grid.
pub fn solve_bound_states(v: &PotentialCurve, n_states: usize, opts: &SolveOptions) -> Result<BoundStates> {
    if n_states == 0 {
        return Err(Error::Domain("at least one state must be requested".into()));
    }
    let symmetric = v.is_symmetric();
    let raw = raw_solve(v, n_states, symmetric, true)?;
    let h = v.spacing();
    let mut warnings = Vec::new();

    let mut energies = raw.energies.clone();
    let mut refined = false;
    if opts.richardson {
        match v.coarsened().filter(|c| c.len() >= 8 && c.len() - 2 >= n_states) {
            Some(coarse) => {
                let rough = raw_solve(&coarse, n_states, symmetric, false)?;
                energies = raw
                    .energies
                    .iter()
                    .zip(&rough.energies)
                    .map(|(f, c)| (4.0 * f - c) / 3.0)
                    .collect();
                refined = true;
            }
            None => warnings.push("grid point count is even; Richardson refinement skipped".into()),
        }
    }

    // Local de Broglie wavelength at the highest requested level.
    let e_max = raw.energies[n_states - 1];
    let v_min = v.v.iter().copied().fold(f64::INFINITY, f64::min);
    if e_max > v_min {
        let k = ((e_max - v_min) / v.kinetic()).sqrt();
        let wavelength = 2.0 * std::f64::consts::PI / k;
        if wavelength < 8.0 * h {
            warnings.push(format!(
                "grid spacing {h:.3e} resolves fewer than 8 points per wavelength ({wavelength:.3e}) at {e_max:.3} meV"
            ));
        }
    }

    let mut wavefunctions = Vec::with_capacity(n_states);
    for (k, u) in raw.vectors.iter().enumerate() {
        let mut psi = Vec::with_capacity(v.len());
        psi.push(0.0);
        psi.extend_from_slice(u);
        psi.push(0.0);
        let norm = (psi.iter().map(|x| x * x).sum::<f64>() * h).sqrt();
        // Fix the overall sign so the first significant lobe is positive.
        let peak = psi.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let first = psi.iter().find(|x| x.abs() > 1e-3 * peak).copied().unwrap_or(1.0);
        let sign = if first < 0.0 { -1.0 } else { 1.0 };
        psi.iter_mut().for_each(|x| *x *= sign / norm);

        if opts.check_decay {
            let peak2 = psi.iter().map(|x| x * x).fold(0.0, f64::max);
            let edge2 = psi[1].powi(2).max(psi[v.len() - 2].powi(2));
            let ratio = edge2 / peak2;
            if ratio > DECAY_TOL {
                return Err(Error::BoundaryDecay { state: k, ratio });
            }
        }
        wavefunctions.push(psi);
    }

    Ok(BoundStates {
        energies,
        raw_energies: raw.energies,
        wavefunctions,
        parities: raw.parities,
        refined,
        warnings,
    })
}

/// Sign changes of a sampled function, ignoring values below `rel` of its peak.
pub fn count_nodes(psi: &[f64], rel: f64) -> usize {
    let peak = psi.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut last = 0.0;
    let mut nodes = 0;
    for &x in psi {
        if x.abs() <= rel * peak {
            continue;
        }
        if last != 0.0 && x.signum() != last {
            nodes += 1;
        }
        last = x.signum();
    }
    nodes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelingResult {
    pub e0_mev: f64,
    pub e1_mev: f64,
    pub delta_e_mev: f64,
    pub nu_ghz: f64,
    pub parity0: Parity,
    pub parity1: Parity,
    /// V at the grid midpoint relative to the potential minimum.
    pub barrier_mev: f64,
    /// Set when E1 lies above the barrier top, i.e. the doublet is not
    /// tunneling dominated.
    pub above_barrier: bool,
    pub grid_points: usize,
    pub spacing: f64,
    pub mass_amu: f64,
    pub refined: bool,
    pub warnings: Vec<String>,
}

fn barrier_top(v: &PotentialCurve) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v.v[n / 2]
    } else {
        0.5 * (v.v[n / 2 - 1] + v.v[n / 2])
    }
}

/// Splitting of the lowest even/odd doublet of a mirror-symmetric potential.
pub fn tunneling_splitting(v: &PotentialCurve, opts: &SolveOptions) -> Result<TunnelingResult> {
    let asym = v.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::Asymmetric { max_deviation: asym });
    }
    let states = solve_bound_states(v, 2, opts)?;
    let parities = states.parities.clone().expect("symmetric potential carries parities");
    let (e0, e1) = (states.energies[0], states.energies[1]);
    let top = barrier_top(v);
    let v_min = v.v.iter().copied().fold(f64::INFINITY, f64::min);
    let delta = e1 - e0;
    Ok(TunnelingResult {
        e0_mev: e0,
        e1_mev: e1,
        delta_e_mev: delta,
        nu_ghz: energy_to_frequency(Mev(delta)).0,
        parity0: parities[0],
        parity1: parities[1],
        barrier_mev: top - v_min,
        above_barrier: e1 >= top,
        grid_points: v.len(),
        spacing: v.spacing(),
        mass_amu: v.mass,
        refined: states.refined,
        warnings: states.warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WkbResult {
    pub delta_e_mev: f64,
    /// Dimensionless under-barrier action S / hbar.
    pub action: f64,
    /// Harmonic quantum at the minimum from a local quadratic fit.
    pub hbar_omega_well_mev: f64,
    /// Energy at which the action is evaluated (the ground level).
    pub energy_mev: f64,
    pub turning_points: (f64, f64),
}

/// Second derivative at grid index `i` from a least-squares parabola
/// through the five nearest points.
fn local_curvature(q: &[f64], v: &[f64], i: usize) -> f64 {
    let lo = i.saturating_sub(2).min(q.len().saturating_sub(5));
    let idx: Vec<usize> = (lo..(lo + 5).min(q.len())).collect();
    let x0 = q[i];
    let a = nalgebra::DMatrix::from_fn(idx.len(), 3, |r, c| (q[idx[r]] - x0).powi(c as i32));
    let b = nalgebra::DVector::from_iterator(idx.len(), idx.iter().map(|&j| v[j]));
    let coef = (a.transpose() * &a).lu().solve(&(a.transpose() * b)).expect("five distinct points");
    2.0 * coef[2]
}

/// WKB estimate (hbar w / pi) exp(-S / hbar) for a symmetric double well.
///
/// The action is evaluated at the finite-difference ground energy between
/// the inner turning points, located by linear interpolation.
pub fn wkb_splitting(v: &PotentialCurve, opts: &SolveOptions) -> Result<WkbResult> {
    let asym = v.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::Asymmetric { max_deviation: asym });
    }
    let e0 = solve_bound_states(v, 1, opts)?.energies[0];
    let n = v.len();
    let mid = n / 2;
    let top = barrier_top(v);
    if e0 >= top {
        return Err(Error::Domain(format!(
            "ground level {e0:.6} meV lies above the barrier top {top:.6} meV"
        )));
    }
    let (q, pot) = (&v.q, &v.v);
    let i_min = (0..mid).min_by(|&a, &b| pot[a].total_cmp(&pot[b])).expect("left half");
    let curvature = local_curvature(q, pot, i_min);
    if !(curvature > 0.0) {
        return Err(Error::Domain("potential minimum has no positive curvature".into()));
    }
    let k = v.kinetic();
    let hbar_omega = (2.0 * k * curvature).sqrt();

    // Inner turning points: last crossing of E0 left of the centre and its mirror.
    let j = (i_min..mid)
        .find(|&j| pot[j] <= e0 && pot[j + 1] > e0)
        .ok_or_else(|| Error::Domain("no classically forbidden region at the ground level".into()))?;
    let left = q[j] + (e0 - pot[j]) / (pot[j + 1] - pot[j]) * (q[j + 1] - q[j]);
    let center = 0.5 * (q[0] + q[n - 1]);
    let right = 2.0 * center - left;

    let f = |i: usize| ((pot[i] - e0).max(0.0) / k).sqrt();
    let inside: Vec<usize> = (j + 1..n).take_while(|&i| q[i] < right).collect();
    let mut action = 0.0;
    if let (Some(&a), Some(&b)) = (inside.first(), inside.last()) {
        action += 0.5 * (q[a] - left) * f(a);
        for w in inside.windows(2) {
            action += 0.5 * (q[w[1]] - q[w[0]]) * (f(w[0]) + f(w[1]));
        }
        action += 0.5 * (right - q[b]) * f(b);
    }
    Ok(WkbResult {
        delta_e_mev: hbar_omega / std::f64::consts::PI * (-action).exp(),
        action,
        hbar_omega_well_mev: hbar_omega,
        energy_mev: e0,
        turning_points: (left, right),
    })
}
