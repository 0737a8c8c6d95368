//! Degeneracy clustering and mirror-parity labels for vibronic eigenstates.
//!
//! The mirror used here is the dihedral plane of the inversion-symmetric
//! point group. In the orbital product basis it acts as sigma_z on each
//! doublet and flips the sign of the Y phonon coordinate. Among the odd-parity
//! one-dimensional irreps this plane is even on A2 and odd on A1, so a
//! singlet with expectation near +1 is labeled A2 and one near -1 is A1.

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::basis::FockBasis;
use super::eigen::Eigenpairs;
use super::hamiltonian::mirror_parity;
use super::sparse::Scalar;
use crate::error::{Error, Result};

pub const DEFAULT_DEG_TOL: f64 = 1e-6;

/// Mirror expectation beyond which a singlet is given an A label.
pub const PARITY_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symmetry {
    A1,
    A2,
    E,
    Unresolved,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetry::A1 => "A1",
            Symmetry::A2 => "A2",
            Symmetry::E => "E",
            Symmetry::Unresolved => "unresolved",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    /// Mean energy of the cluster (meV).
    pub energy: f64,
    pub degeneracy: usize,
    pub symmetry: Symmetry,
    /// Mirror expectation summed over the cluster members.
    pub mirror: f64,
    /// Positions of the members in the eigenvector block.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub max_residual: f64,
    pub norm_estimate: f64,
    pub matvecs: usize,
    pub krylov_dim: usize,
}

#[derive(Debug, Clone)]
pub struct LabeledSpectrum<T: Scalar = f64> {
    pub levels: Vec<Level>,
    pub eigvecs: Vec<DVector<T>>,
    pub energies: Vec<f64>,
    pub n_max: usize,
    pub boson_dim: usize,
    pub convergence: Convergence,
    pub diagnostics: Vec<String>,
}

impl<T: Scalar> LabeledSpectrum<T> {
    pub fn lowest(&self, symmetry: Symmetry) -> Option<&Level> {
        self.levels.iter().find(|l| l.symmetry == symmetry)
    }

    pub fn vectors_of(&self, level: &Level) -> Vec<&DVector<T>> {
        level.indices.iter().map(|&i| &self.eigvecs[i]).collect()
    }
}

/// Groups eigenpairs into levels and attaches A1/A2/E labels.
pub fn classify_states<T: Scalar>(
    pairs: Eigenpairs<T>,
    basis: &FockBasis,
    deg_tol: f64,
) -> Result<LabeledSpectrum<T>> {
    if !(deg_tol > 0.0) {
        return Err(Error::Domain(format!("degeneracy tolerance must be positive, got {deg_tol}")));
    }
    let parity = mirror_parity(basis);
    if pairs.vectors.iter().any(|v| v.len() != parity.len()) {
        return Err(Error::Shape(format!(
            "eigenvectors do not match the basis dimension {}",
            parity.len()
        )));
    }
    let expectation: Vec<f64> = pairs
        .vectors
        .iter()
        .map(|v| v.iter().zip(&parity).map(|(c, s)| c.modulus_squared() * s).sum())
        .collect();

    let mut levels = Vec::new();
    let mut diagnostics = Vec::new();
    let mut start = 0;
    let n = pairs.values.len();
    while start < n {
        let mut end = start + 1;
        while end < n && pairs.values[end] - pairs.values[end - 1] <= deg_tol {
            end += 1;
        }
        let indices: Vec<usize> = (start..end).collect();
        let energy = pairs.values[start..end].iter().sum::<f64>() / (end - start) as f64;
        let mirror: f64 = expectation[start..end].iter().sum();
        let symmetry = match indices.len() {
            1 if mirror > PARITY_THRESHOLD => Symmetry::A2,
            1 if mirror < -PARITY_THRESHOLD => Symmetry::A1,
            1 => {
                diagnostics.push(format!("level at {energy:.6} meV has mixed mirror parity {mirror:.3}"));
                Symmetry::Unresolved
            }
            2 => Symmetry::E,
            size => {
                diagnostics.push(format!(
                    "accidental {size}-fold degeneracy at {energy:.6} meV left unresolved"
                ));
                Symmetry::Unresolved
            }
        };
        levels.push(Level {
            energy,
            degeneracy: indices.len(),
            symmetry,
            mirror,
            indices,
        });
        start = end;
    }
    if let Some(last) = levels.last() {
        if last.degeneracy == 1 && n > 0 {
            diagnostics.push(
                "highest computed level may have an unconverged partner outside the window".into(),
            );
        }
    }

    Ok(LabeledSpectrum {
        levels,
        energies: pairs.values,
        eigvecs: pairs.vectors,
        n_max: basis.n_max(),
        boson_dim: basis.dim(),
        convergence: Convergence {
            max_residual: pairs.residuals.iter().copied().fold(0.0, f64::max),
            norm_estimate: pairs.norm_estimate,
            matvecs: pairs.matvecs,
            krylov_dim: pairs.basis_size,
        },
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs_from(values: Vec<f64>, vectors: Vec<DVector<f64>>) -> Eigenpairs<f64> {
        let k = values.len();
        Eigenpairs {
            values,
            vectors,
            residuals: vec![0.0; k],
            matvecs: 0,
            basis_size: k,
            norm_estimate: 1.0,
        }
    }

    fn unit(dim: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        v
    }

    #[test]
    fn odd_phonon_flips_mirror_parity() {
        // Symmetric orbital combination times one Y quantum.
        let b = FockBasis::new(2);
        let db = b.dim();
        let j = b.index(0, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = DVector::zeros(4 * db);
        v[j] = h;
        v[3 * db + j] = h;
        let s = classify_states(pairs_from(vec![0.0], vec![v]), &b, DEFAULT_DEG_TOL).unwrap();
        assert!((s.levels[0].mirror + 1.0).abs() < 1e-15);
        assert_eq!(s.levels[0].symmetry, Symmetry::A1);
    }

    #[test]
    fn clusters_pairs_and_flags_larger_groups() {
        let b = FockBasis::new(1);
        let d = 4 * b.dim();
        let values = vec![0.0, 1.0, 1.0 + 1e-9, 2.0, 2.0, 2.0];
        let vectors = (0..6).map(|i| unit(d, i)).collect();
        let s = classify_states(pairs_from(values, vectors), &b, DEFAULT_DEG_TOL).unwrap();
        let syms: Vec<_> = s.levels.iter().map(|l| l.symmetry).collect();
        // unit(0) is xx with no Y quanta: mirror +1.
        assert_eq!(syms, vec![Symmetry::A2, Symmetry::E, Symmetry::Unresolved]);
        assert_eq!(s.levels[1].degeneracy, 2);
        assert!(s.diagnostics.iter().any(|d| d.contains("3-fold")));
    }

    #[test]
    fn mixed_parity_singlet_is_unresolved() {
        let b = FockBasis::new(0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = DVector::from_vec(vec![h, h, 0.0, 0.0]);
        let s = classify_states(pairs_from(vec![0.0], vec![v]), &b, DEFAULT_DEG_TOL).unwrap();
        assert_eq!(s.levels[0].symmetry, Symmetry::Unresolved);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let b = FockBasis::new(0);
        assert!(classify_states(pairs_from(vec![], vec![]), &b, 0.0).is_err());
    }
}
