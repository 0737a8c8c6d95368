//! Block Lanczos with full reorthogonalization for the lowest eigenpairs of a
//! sparse Hermitian matrix.
//!
//! The projected matrix is accumulated as the full Rayleigh quotient
//! V^H H V, so loss of orthogonality cannot creep into the three-term
//! recurrence. A block of several start vectors resolves degenerate pairs,
//! which a single-vector Krylov space cannot.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::{Scalar, SparseOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Number of lowest eigenpairs wanted.
    pub k: usize,
    /// Residual tolerance relative to the matrix norm estimate.
    pub tol: f64,
    pub block_size: usize,
    /// Cap on the Krylov basis size.
    pub max_basis: usize,
    pub seed: u64,
}

impl EigenOptions {
    pub fn new(k: usize) -> Self {
        EigenOptions {
            k,
            tol: 1e-10,
            block_size: 4,
            max_basis: 1600,
            seed: 0x5eed,
        }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpairs<T> {
    /// Ascending.
    pub values: Vec<f64>,
    pub vectors: Vec<DVector<T>>,
    /// ||H v - E v|| per pair, evaluated explicitly.
    pub residuals: Vec<f64>,
    pub matvecs: usize,
    pub basis_size: usize,
    pub norm_estimate: f64,
}

impl<T: Scalar> Eigenpairs<T> {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

fn random_column<T: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> DVector<T> {
    DVector::from_fn(n, |_, _| T::from_real(rng.random::<f64>() - 0.5))
}

/// Krylov basis stored column-major so projections run as matrix products.
struct Basis<T: Scalar> {
    v: DMatrix<T>,
    len: usize,
}

impl<T: Scalar> Basis<T> {
    fn columns(&self) -> nalgebra::DMatrixView<'_, T> {
        self.v.columns(0, self.len)
    }

    fn column(&self, j: usize) -> &[T] {
        let n = self.v.nrows();
        &self.v.as_slice()[j * n..(j + 1) * n]
    }

    /// Block classical Gram-Schmidt against the stored columns.
    fn orthogonalize(&self, w: &mut DMatrix<T>, passes: usize) {
        if self.len == 0 {
            return;
        }
        for _ in 0..passes {
            let c = self.columns().ad_mul(w);
            w.gemm(-T::one(), &self.columns(), &c, T::one());
        }
    }

    /// Appends the candidates as new orthonormal columns. Candidates that
    /// collapse onto the existing span are replaced by random directions.
    fn extend(&mut self, mut w: DMatrix<T>, rng: &mut ChaCha8Rng) -> usize {
        let n = self.v.nrows();
        let first = self.len;
        let scales: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
        // The caller has already subtracted one projection, so a single
        // further pass completes "twice is enough".
        self.orthogonalize(&mut w, 1);
        for (j, scale) in scales.into_iter().enumerate() {
            if self.len >= self.v.ncols() {
                break;
            }
            let mut col: DVector<T> = w.column(j).into_owned();
            let mut attempts = 0;
            loop {
                // Within-block pass against columns appended in this call.
                for _ in 0..2 {
                    for i in first..self.len {
                        let q = self.v.column(i);
                        let c = q.dotc(&col);
                        col.axpy(-c, &q, T::one());
                    }
                }
                let norm = col.norm();
                if norm > 1e-10 * scale.max(1e-300) || attempts == 8 {
                    break;
                }
                let mut fresh = DMatrix::from_columns(&[random_column::<T>(rng, n)]);
                self.orthogonalize(&mut fresh, 2);
                col = fresh.column(0).into_owned();
                attempts += 1;
            }
            let norm = col.norm();
            if norm == 0.0 {
                continue;
            }
            col.unscale_mut(norm);
            self.v.set_column(self.len, &col);
            self.len += 1;
        }
        self.len - first
    }
}

pub fn lowest_eigenpairs<T: Scalar>(h: &SparseOperator<T>, opts: &EigenOptions) -> Result<Eigenpairs<T>> {
    let n = h.dim();
    if opts.k == 0 || opts.k >= n {
        return Err(Error::Domain(format!(
            "requested {} eigenpairs of a {n}-dimensional matrix; need 0 < k < dim",
            opts.k
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let block = opts.block_size.clamp(1, n);
    let max_basis = opts.max_basis.max(opts.k + 2 * block).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis = Basis {
        v: DMatrix::zeros(n, max_basis),
        len: 0,
    };
    // Rayleigh quotient V^H H V; column block j is filled when block j is
    // expanded and rows of later blocks follow from Hermiticity.
    let mut t = DMatrix::<T>::zeros(max_basis, max_basis);
    let mut matvecs = 0;

    let start = DMatrix::from_columns(&(0..block).map(|_| random_column::<T>(&mut rng, n)).collect::<Vec<_>>());
    let mut first = 0;
    basis.extend(start, &mut rng);

    let mut next_check = (opts.k + block).max(48);
    let mut best_residual = f64::INFINITY;
    loop {
        let m = basis.len;
        let b = m - first;
        let mut hq = DMatrix::<T>::zeros(n, b);
        for j in 0..b {
            let y = h.apply_slice(basis.column(first + j));
            hq.column_mut(j).copy_from_slice(&y);
            matvecs += 1;
        }
        let c = basis.columns().ad_mul(&hq);
        t.view_mut((0, first), (m, b)).copy_from(&c);
        for i in 0..b {
            for j in 0..first {
                t[(first + i, j)] = c[(j, i)].conjugate();
            }
        }
        let mut w = hq;
        w.gemm(-T::one(), &basis.columns(), &c, T::one());

        let exhausted = m >= n;
        let full = m >= max_basis;
        if m >= opts.k + block && (m >= next_check || exhausted || full) {
            next_check = (m + m / 2).max(m + 48);
            let ritz = ritz_pairs(&t, m, opts.k);
            let norm = ritz.norm.max(f64::MIN_POSITIVE);
            // H V = V T + W E^H, so a Ritz residual is W times the trailing
            // block of its coefficient vector.
            let tail = ritz.vectors.rows(first, b);
            let worst = (&w * tail).column_iter().map(|r| r.norm()).fold(0.0, f64::max);
            best_residual = best_residual.min(worst / norm);
            if worst <= opts.tol * norm || exhausted {
                return Ok(finish(h, &basis, &ritz, opts.k, matvecs));
            }
            if full {
                return Err(Error::NonConvergence {
                    iterations: matvecs,
                    best_residual,
                });
            }
        }

        let room = (max_basis - m).min(block);
        first = m;
        let added = basis.extend(w.columns(0, room).into_owned(), &mut rng);
        if added == 0 {
            let ritz = ritz_pairs(&t, m, opts.k);
            return Ok(finish(h, &basis, &ritz, opts.k, matvecs));
        }
    }
}

struct Ritz<T: Scalar> {
    values: Vec<f64>,
    /// Columns are eigenvectors of the projected matrix, ascending.
    vectors: DMatrix<T>,
    norm: f64,
}

fn ritz_pairs<T: Scalar>(t: &DMatrix<T>, m: usize, k: usize) -> Ritz<T> {
    let t = t.view((0, 0), (m, m));
    let t = (&t + t.adjoint()).unscale(2.0);
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let norm = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let take = k.min(m);
    let values = order[..take].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m, take, |r, c| eig.eigenvectors[(r, order[c])]);
    Ritz { values, vectors, norm }
}

fn finish<T: Scalar>(h: &SparseOperator<T>, basis: &Basis<T>, ritz: &Ritz<T>, k: usize, matvecs: usize) -> Eigenpairs<T> {
    let x = basis.columns() * &ritz.vectors;
    let mut vectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for i in 0..k {
        let mut v: DVector<T> = x.column(i).into_owned();
        let norm = v.norm();
        v.unscale_mut(norm);
        let mut r = h.apply(&v);
        r.axpy(T::from_real(-ritz.values[i]), &v, T::one());
        residuals.push(r.norm());
        vectors.push(v);
    }
    Eigenpairs {
        values: ritz.values.clone(),
        vectors,
        residuals,
        matvecs: matvecs + k,
        basis_size: basis.len,
        norm_estimate: ritz.norm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn random_sparse_symmetric(n: usize, seed: u64) -> SparseOperator<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, rng.random::<f64>() * 10.0 - 5.0));
            for _ in 0..3 {
                let j = rng.random_range(0..n);
                if j != i {
                    let v = rng.random::<f64>() - 0.5;
                    t.push((i, j, v));
                    t.push((j, i, v));
                }
            }
        }
        SparseOperator::from_triplets(n, t, true)
    }

    fn dense_lowest(h: &DMatrix<f64>, k: usize) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(h.clone()).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e.truncate(k);
        e
    }

    #[test]
    fn matches_dense_on_random_instances() {
        for (n, seed) in [(24, 1), (60, 2), (200, 3)] {
            let h = random_sparse_symmetric(n, seed);
            let k = 6.min(n - 1);
            let got = lowest_eigenpairs(&h, &EigenOptions::new(k)).unwrap();
            let want = dense_lowest(&h.to_dense(), k);
            for (g, w) in got.values.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9 * w.abs().max(1.0), "n={n}: {g} vs {w}");
            }
            assert!(got.max_residual() < 1e-8);
        }
    }

    #[test]
    fn resolves_exact_degeneracy() {
        // Two identical decoupled blocks: every eigenvalue is doubly degenerate.
        let n = 40;
        let single = random_sparse_symmetric(n, 9);
        let mut t = Vec::new();
        for (r, c, v) in single.entries() {
            t.push((r, c, v));
            t.push((r + n, c + n, v));
        }
        let h = SparseOperator::from_triplets(2 * n, t, true);
        let got = lowest_eigenpairs(&h, &EigenOptions::new(6)).unwrap();
        for pair in got.values.chunks(2) {
            assert!((pair[0] - pair[1]).abs() < 1e-9, "{pair:?}");
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let h = random_sparse_symmetric(120, 5);
        let got = lowest_eigenpairs(&h, &EigenOptions::new(8)).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let d = got.vectors[i].dot(&got.vectors[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let h = random_sparse_symmetric(150, 7);
        let a = lowest_eigenpairs(&h, &EigenOptions::new(5)).unwrap();
        let b = lowest_eigenpairs(&h, &EigenOptions::new(5)).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn complex_hermitian() {
        let n = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, Complex64::new(rng.random::<f64>() * 4.0, 0.0)));
            let j = (i + 3) % n;
            let z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            t.push((i, j, z));
            t.push((j, i, z.conj()));
        }
        let h = SparseOperator::from_triplets(n, t, true);
        let got = lowest_eigenpairs(&h, &EigenOptions::new(4)).unwrap();
        let mut want: Vec<f64> = SymmetricEigen::new(h.to_dense()).eigenvalues.iter().copied().collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.values.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let h = random_sparse_symmetric(10, 1);
        assert!(lowest_eigenpairs(&h, &EigenOptions::new(10)).is_err());
        assert!(lowest_eigenpairs(&h, &EigenOptions::new(2).tol(0.0)).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let h = random_sparse_symmetric(400, 13);
        let mut opts = EigenOptions::new(3).tol(1e-14);
        opts.max_basis = 12;
        opts.block_size = 2;
        match lowest_eigenpairs(&h, &opts) {
            Err(Error::NonConvergence { best_residual, .. }) => assert!(best_residual.is_finite()),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
