//! Quantities read off the vibronic model: Jahn-Teller energies, the dark to
//! bright gap, Ham reduction factors and the spin-orbit splitting.

use nalgebra::{DVector, Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::FockBasis;
use super::classify::{classify_states, LabeledSpectrum, Symmetry, DEFAULT_DEG_TOL};
use super::eigen::{lowest_eigenpairs, EigenOptions};
use super::hamiltonian::{apply_electronic, build_hamiltonian, orbital_y_g, orbital_y_u, HamiltonianMatrix, SpinProjection};
use super::sparse::Scalar;
use crate::error::{Error, Result};
use crate::units::{energy_to_frequency, Ghz, Mev, PjtParams};

/// Solver settings shared by every vibronic calculation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VibronicConfig {
    pub n_max: usize,
    /// Number of lowest eigenpairs.
    pub k: usize,
    /// Relative residual tolerance.
    pub tol: f64,
    pub deg_tol: f64,
    pub seed: u64,
}

impl Default for VibronicConfig {
    fn default() -> Self {
        VibronicConfig {
            n_max: 60,
            k: 24,
            tol: 1e-10,
            deg_tol: DEFAULT_DEG_TOL,
            seed: 0x5eed,
        }
    }
}

impl VibronicConfig {
    fn eigen_options(&self, dim: usize) -> EigenOptions {
        let mut opts = EigenOptions::new(self.k.min(dim.saturating_sub(1)).max(1)).tol(self.tol).seed(self.seed);
        opts.max_basis = opts.max_basis.min(dim);
        opts
    }
}

/// (E_JT1, E_JT2) = ((F_g + F_u)^2, (F_g - F_u)^2) / (2 hbar omega).
pub fn jt_energies(p: &PjtParams) -> (Mev, Mev) {
    let w2 = 2.0 * p.hbar_omega.0;
    let (g, u) = (p.f_g.0.abs(), p.f_u.0.abs());
    (Mev((g + u).powi(2) / w2), Mev((g - u).powi(2) / w2))
}

/// Diagonalizes the spin-free Hamiltonian and labels the lowest levels.
pub fn solve_spectrum(p: &PjtParams, cfg: &VibronicConfig) -> Result<(LabeledSpectrum<f64>, Vec<String>)> {
    let basis = FockBasis::new(cfg.n_max);
    let h = build_hamiltonian(p, &basis, SpinProjection::Zero, false)?;
    let HamiltonianMatrix::Real(op) = &h.matrix else {
        unreachable!("spin-free Hamiltonian is real")
    };
    let dim = op.dim();
    let pairs = if dim <= cfg.k.max(1) || dim <= 64 {
        dense_lowest(&op.to_dense(), cfg.k.min(dim))
    } else {
        lowest_eigenpairs(op, &cfg.eigen_options(dim))?
    };
    Ok((classify_states(pairs, &basis, cfg.deg_tol)?, h.warnings))
}

/// Exact eigenpairs for tiny matrices, where a Krylov method cannot even
/// build a starting block.
fn dense_lowest<T: Scalar>(h: &nalgebra::DMatrix<T>, k: usize) -> super::eigen::Eigenpairs<T> {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(k);
    let vectors: Vec<DVector<T>> = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let residuals = values
        .iter()
        .zip(&vectors)
        .map(|(&e, v)| (h * v - v * T::from_real(e)).norm())
        .collect();
    super::eigen::Eigenpairs {
        values,
        vectors,
        residuals,
        matvecs: 0,
        basis_size: h.nrows(),
        norm_estimate: eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max),
    }
}

/// delta = E(lowest E) - E(lowest A2).
pub fn vibronic_gap<T: Scalar>(spec: &LabeledSpectrum<T>) -> Result<Mev> {
    let e = spec.lowest(Symmetry::E).ok_or(Error::MissingLabel("E"))?;
    let a2 = spec.lowest(Symmetry::A2).ok_or(Error::MissingLabel("A2"))?;
    Ok(Mev(e.energy - a2.energy))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamFactors {
    pub p_u: f64,
    pub p_g: f64,
}

impl HamFactors {
    pub fn mean(&self) -> f64 {
        0.5 * (self.p_u + self.p_g)
    }
}

/// Hermitian 2x2 restriction of an electronic operator to a doublet.
fn restrict<T: Scalar>(op: &Matrix4<Complex64>, pair: &[&DVector<T>], boson_dim: usize) -> Matrix2<Complex64> {
    let images: Vec<DVector<Complex64>> = pair.iter().map(|v| apply_electronic(op, v, boson_dim)).collect();
    Matrix2::from_fn(|a, b| {
        pair[a]
            .iter()
            .zip(images[b].iter())
            .map(|(x, y)| x.to_complex().conj() * y)
            .sum()
    })
}

/// Largest |<a|O|b>| over orthonormal bases of the doublet: half the spread
/// of the eigenvalues of the restricted operator.
fn gauge_max_element<T: Scalar>(op: &Matrix4<Complex64>, pair: &[&DVector<T>], boson_dim: usize) -> f64 {
    let m = restrict(op, pair, boson_dim);
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    (0.25 * (a - d).powi(2) + off.norm_sqr()).sqrt()
}

/// Ham reduction factors of the orbital sigma_y operators inside the lowest
/// vibronic E doublet.
pub fn ham_factors<T: Scalar>(spec: &LabeledSpectrum<T>) -> Result<HamFactors> {
    let level = spec.lowest(Symmetry::E).ok_or(Error::MissingLabel("E"))?;
    let pair = spec.vectors_of(level);
    Ok(HamFactors {
        p_u: gauge_max_element(&orbital_y_u(), &pair, spec.boson_dim),
        p_g: gauge_max_element(&orbital_y_g(), &pair, spec.boson_dim),
    })
}

/// Delta_SO = p_u lambda_u + p_g lambda_g.
pub fn so_splitting(p_u: f64, p_g: f64, lambda_u: Ghz, lambda_g: Ghz) -> Ghz {
    Ghz(p_u * lambda_u.0 + p_g * lambda_g.0)
}

/// Splitting of the lowest E-derived doublet obtained by diagonalizing the
/// Hamiltonian with spin-orbit coupling in the given spin block.
///
/// The two spin-orbit levels are identified by their weight in the spin-free
/// E doublet.
pub fn so_splitting_direct(p: &PjtParams, cfg: &VibronicConfig, m_s: SpinProjection) -> Result<Ghz> {
    if m_s == SpinProjection::Zero {
        return Err(Error::Domain("spin-orbit splitting vanishes identically for m_s = 0".into()));
    }
    let (spin_free, _) = solve_spectrum(p, cfg)?;
    let level = spin_free.lowest(Symmetry::E).ok_or(Error::MissingLabel("E"))?;
    let doublet = spin_free.vectors_of(level);

    let basis = FockBasis::new(cfg.n_max);
    let h = build_hamiltonian(p, &basis, m_s, true)?;
    let energies_and_vectors: Vec<(f64, DVector<Complex64>)> = match &h.matrix {
        // Vanishing spin-orbit constants leave the matrix real.
        HamiltonianMatrix::Real(op) => {
            let pairs = if op.dim() <= 64 {
                dense_lowest(&op.to_dense(), cfg.k.min(op.dim()))
            } else {
                lowest_eigenpairs(op, &cfg.eigen_options(op.dim()))?
            };
            pairs
                .values
                .into_iter()
                .zip(pairs.vectors)
                .map(|(e, v)| (e, v.map(Complex64::from)))
                .collect()
        }
        HamiltonianMatrix::Complex(op) => {
            let pairs = if op.dim() <= 64 {
                dense_lowest(&op.to_dense(), cfg.k.min(op.dim()))
            } else {
                lowest_eigenpairs(op, &cfg.eigen_options(op.dim()))?
            };
            pairs.values.into_iter().zip(pairs.vectors).collect()
        }
    };

    let mut weighted: Vec<(f64, f64)> = energies_and_vectors
        .iter()
        .map(|(e, v)| {
            let w: f64 = doublet
                .iter()
                .map(|d| d.iter().zip(v.iter()).map(|(a, b)| b * a).sum::<Complex64>().norm_sqr())
                .sum();
            (w, *e)
        })
        .collect();
    weighted.sort_by(|a, b| b.0.total_cmp(&a.0));
    if weighted.len() < 2 || weighted[1].0 < 0.5 {
        return Err(Error::MissingLabel("E"));
    }
    Ok(energy_to_frequency(Mev((weighted[0].1 - weighted[1].1).abs())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VibronicReport {
    pub label: String,
    pub x: f64,
    pub e_jt1_mev: f64,
    pub e_jt2_mev: f64,
    pub delta_mev: f64,
    pub p_u: f64,
    pub p_g: f64,
    pub p_mean: f64,
    /// Ham-reduced spin-orbit splitting when lambda values are known.
    pub delta_so_ghz: Option<f64>,
    pub delta_so_direct_ghz: Option<f64>,
    pub n_max: usize,
    pub converged: bool,
    pub max_residual: f64,
    pub ground: String,
    pub warnings: Vec<String>,
}

pub fn vibronic_report(p: &PjtParams, cfg: &VibronicConfig, direct_so: bool) -> Result<VibronicReport> {
    let (e1, e2) = jt_energies(p);
    let (spec, mut warnings) = solve_spectrum(p, cfg)?;
    warnings.extend(spec.diagnostics.iter().cloned());
    let delta = vibronic_gap(&spec)?;
    let ham = ham_factors(&spec)?;
    let lambdas = p.lambda_u.zip(p.lambda_g);
    let delta_so = lambdas.map(|(u, g)| so_splitting(ham.p_u, ham.p_g, u, g).0);
    let delta_so_direct = match (direct_so, lambdas) {
        (true, Some(_)) => Some(so_splitting_direct(p, cfg, SpinProjection::Plus)?.0),
        _ => None,
    };
    let converged = spec.convergence.max_residual <= cfg.tol * spec.convergence.norm_estimate.max(1.0) * 10.0;
    Ok(VibronicReport {
        label: p.label.to_string(),
        x: p.label.value(),
        e_jt1_mev: e1.0,
        e_jt2_mev: e2.0,
        delta_mev: delta.0,
        p_u: ham.p_u,
        p_g: ham.p_g,
        p_mean: ham.mean(),
        delta_so_ghz: delta_so,
        delta_so_direct_ghz: delta_so_direct,
        n_max: cfg.n_max,
        converged,
        max_residual: spec.convergence.max_residual,
        ground: spec.levels.first().map(|l| l.symmetry.to_string()).unwrap_or_default(),
        warnings,
    })
}
