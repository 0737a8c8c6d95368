use std::io::{self, Write};

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

/// Field types the eigensolver works over: `f64` and `Complex64`.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {
    fn from_complex(z: Complex64) -> Option<Self>;
    fn to_complex(self) -> Complex64;
}

impl Scalar for f64 {
    fn from_complex(z: Complex64) -> Option<Self> {
        (z.im == 0.0).then_some(z.re)
    }

    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    fn from_complex(z: Complex64) -> Option<Self> {
        Some(z)
    }

    fn to_complex(self) -> Complex64 {
        self
    }
}

/// Square matrix in compressed sparse row layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
    hermitian: bool,
}

impl<T: Scalar> SparseOperator<T> {
    /// Builds from (row, col, value) triplets. Duplicate entries are summed
    /// and exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, T)>, hermitian: bool) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
            if last == Some((r, c)) {
                let top = values.last_mut().expect("entry exists");
                *top += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut op = SparseOperator {
            dim,
            row_ptr,
            col_idx,
            values,
            hermitian,
        };
        op.drop_zeros();
        op
    }

    fn drop_zeros(&mut self) {
        let mut row_ptr = vec![0; self.dim + 1];
        let mut col_idx = Vec::with_capacity(self.values.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.values[k] != T::zero() {
                    col_idx.push(self.col_idx[k]);
                    values.push(self.values[k]);
                }
            }
            row_ptr[r + 1] = values.len();
        }
        self.row_ptr = row_ptr;
        self.col_idx = col_idx;
        self.values = values;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        let cols = &self.col_idx[self.row_ptr[row]..self.row_ptr[row + 1]];
        match cols.binary_search(&col) {
            Ok(k) => self.values[self.row_ptr[row] + k],
            Err(_) => T::zero(),
        }
    }

    /// Iterates stored entries as (row, col, value).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    /// max |H_ij - conj(H_ji)| over stored entries.
    pub fn hermiticity_error(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conjugate()).modulus())
            .fold(0.0, f64::max)
    }

    /// Largest absolute row sum; an upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| {
                self.values[self.row_ptr[r]..self.row_ptr[r + 1]]
                    .iter()
                    .map(|v| v.modulus())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// y = A x. Rows are evaluated in parallel; each row sum is sequential, so
    /// the result does not depend on thread count.
    pub fn apply(&self, x: &DVector<T>) -> DVector<T> {
        DVector::from_vec(self.apply_slice(x.as_slice()))
    }

    /// [`apply`](Self::apply) on a plain slice.
    pub fn apply_slice(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .into_par_iter()
            .with_min_len(256)
            .map(|r| {
                let mut acc = T::zero();
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.values[k] * x[self.col_idx[k]];
                }
                acc
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    /// Plain-text coordinate dump, one `row col re im` line per entry.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# dim {} nnz {}", self.dim, self.nnz())?;
        for (r, c, v) in self.entries() {
            let z = v.to_complex();
            writeln!(w, "{r} {c} {:.17e} {:.17e}", z.re, z.im)?;
        }
        Ok(())
    }
}

impl SparseOperator<Complex64> {
    /// Real copy when every stored entry has an exactly zero imaginary part.
    pub fn to_real(&self) -> Option<SparseOperator<f64>> {
        let values = self
            .values
            .iter()
            .map(|z| f64::from_complex(*z))
            .collect::<Option<Vec<_>>>()?;
        Some(SparseOperator {
            dim: self.dim,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values,
            hermitian: self.hermitian,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_summed_and_zeros_dropped() {
        let op = SparseOperator::from_triplets(
            3,
            vec![(0, 0, 1.0), (0, 0, 2.0), (2, 1, 5.0), (1, 2, 5.0), (1, 1, 0.0)],
            true,
        );
        assert_eq!(op.nnz(), 3);
        assert_eq!(op.get(0, 0), 3.0);
        assert_eq!(op.get(1, 1), 0.0);
        assert_eq!(op.hermiticity_error(), 0.0);
        let y = op.apply(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        assert_eq!(y.as_slice(), &[3.0, 15.0, 10.0]);
    }

    #[test]
    fn detects_non_hermitian_entries() {
        let i = Complex64::new(0.0, 1.0);
        let op = SparseOperator::from_triplets(2, vec![(0, 1, i), (1, 0, i)], true);
        assert!((op.hermiticity_error() - 2.0).abs() < 1e-15);
        let ok = SparseOperator::from_triplets(2, vec![(0, 1, i), (1, 0, -i)], true);
        assert_eq!(ok.hermiticity_error(), 0.0);
        assert!(ok.to_real().is_none());
    }

    #[test]
    fn coordinate_dump() {
        let op = SparseOperator::from_triplets(2, vec![(0, 1, 1.5), (1, 0, 1.5)], true);
        let mut buf = Vec::new();
        op.write_coordinate(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 3);
        assert!(s.lines().nth(1).unwrap().starts_with("0 1 1.5"));
    }
}
