//! Spin-vibronic Hamiltonian of the e_u x e_g excited manifold coupled to one
//! E_g phonon doublet:
//!
//! H = H_osc + H_pJT + W + H_SO
//!
//! The electronic space is the product basis {xx, xy, yx, yy}, first factor
//! e_u and second e_g. A full state index is `4 * boson_dim` long with the
//! electronic index as the slow coordinate.

use nalgebra::{DVector, Matrix2, Matrix4};
use num_complex::Complex64;

use super::basis::{self, FockBasis, Mode};
use super::sparse::{Scalar, SparseOperator};
use crate::error::{Error, Result};
use crate::units::PjtParams;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

pub(crate) fn pauli_0() -> Matrix2<C> {
    Matrix2::new(ONE, ZERO, ZERO, ONE)
}

pub(crate) fn pauli_x() -> Matrix2<C> {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

pub(crate) fn pauli_y() -> Matrix2<C> {
    Matrix2::new(ZERO, -I, I, ZERO)
}

pub(crate) fn pauli_z() -> Matrix2<C> {
    Matrix2::new(ONE, ZERO, ZERO, -ONE)
}

/// a (x) b with `a` acting on e_u and `b` on e_g.
pub(crate) fn product(a: &Matrix2<C>, b: &Matrix2<C>) -> Matrix4<C> {
    let mut m = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    m
}

/// Symmetry-adapted electronic states as rows over {xx, xy, yx, yy}.
///
/// `SYMMETRIC` = (xx + yy)/sqrt2, `ANTISYMMETRIC` = (xy - yx)/sqrt2,
/// `E_X` = (xx - yy)/sqrt2, `E_Y` = (xy + yx)/sqrt2.
pub mod electronic {
    use std::f64::consts::FRAC_1_SQRT_2 as H;

    pub const SYMMETRIC: [f64; 4] = [H, 0.0, 0.0, H];
    pub const ANTISYMMETRIC: [f64; 4] = [0.0, H, -H, 0.0];
    pub const E_X: [f64; 4] = [H, 0.0, 0.0, -H];
    pub const E_Y: [f64; 4] = [0.0, H, H, 0.0];
}

/// Static electronic splitting in the product basis.
///
/// The exchange-antisymmetric singlet sits at -Lambda, the symmetric one at
/// +Lambda and the E pair at -Xi.
pub fn electronic_splitting(lambda: f64, xi: f64) -> Matrix4<f64> {
    use electronic::*;
    let proj = |v: [f64; 4]| {
        let v = nalgebra::Vector4::from(v);
        v * v.transpose()
    };
    proj(SYMMETRIC) * lambda - proj(ANTISYMMETRIC) * lambda - (proj(E_X) + proj(E_Y)) * xi
}

/// Electron spin projection along the defect axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinProjection {
    Minus,
    Zero,
    Plus,
}

impl SpinProjection {
    pub fn value(self) -> f64 {
        match self {
            SpinProjection::Minus => -1.0,
            SpinProjection::Zero => 0.0,
            SpinProjection::Plus => 1.0,
        }
    }
}

impl TryFrom<i32> for SpinProjection {
    type Error = Error;

    fn try_from(m: i32) -> Result<Self> {
        match m {
            -1 => Ok(SpinProjection::Minus),
            0 => Ok(SpinProjection::Zero),
            1 => Ok(SpinProjection::Plus),
            _ => Err(Error::Domain(format!("m_s must be -1, 0 or +1, got {m}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum HamiltonianMatrix {
    Real(SparseOperator<f64>),
    Complex(SparseOperator<Complex64>),
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        match self {
            HamiltonianMatrix::Real(h) => h.dim(),
            HamiltonianMatrix::Complex(h) => h.dim(),
        }
    }

    pub fn hermiticity_error(&self) -> f64 {
        match self {
            HamiltonianMatrix::Real(h) => h.hermiticity_error(),
            HamiltonianMatrix::Complex(h) => h.hermiticity_error(),
        }
    }

    pub fn as_real(&self) -> Option<&SparseOperator<f64>> {
        match self {
            HamiltonianMatrix::Real(h) => Some(h),
            HamiltonianMatrix::Complex(_) => None,
        }
    }

    pub fn as_complex(&self) -> Option<&SparseOperator<Complex64>> {
        match self {
            HamiltonianMatrix::Complex(h) => Some(h),
            HamiltonianMatrix::Real(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VibronicHamiltonian {
    pub matrix: HamiltonianMatrix,
    pub basis: FockBasis,
    pub m_s: SpinProjection,
    pub include_so: bool,
    pub warnings: Vec<String>,
}

struct Assembler {
    boson_dim: usize,
    triplets: Vec<(usize, usize, C)>,
}

impl Assembler {
    fn add(&mut self, electronic: &Matrix4<C>, boson: &[(usize, usize, f64)], scale: f64) {
        if scale == 0.0 {
            return;
        }
        let db = self.boson_dim;
        for e1 in 0..4 {
            for e2 in 0..4 {
                let m = electronic[(e1, e2)];
                if m == ZERO {
                    continue;
                }
                for &(r, c, v) in boson {
                    self.triplets.push((e1 * db + r, e2 * db + c, m * (v * scale)));
                }
            }
        }
    }
}

pub fn build_hamiltonian(
    p: &PjtParams,
    basis: &FockBasis,
    m_s: SpinProjection,
    include_so: bool,
) -> Result<VibronicHamiltonian> {
    p.validate()?;
    let db = basis.dim();
    let mut asm = Assembler {
        boson_dim: db,
        triplets: Vec::new(),
    };
    let mut warnings = Vec::new();

    let (s0, sx, sy, sz) = (pauli_0(), pauli_x(), pauli_y(), pauli_z());
    let id4 = Matrix4::<C>::identity();

    let oscillator: Vec<_> = basis
        .states()
        .iter()
        .enumerate()
        .map(|(i, &(nx, ny))| (i, i, (nx + ny + 1) as f64))
        .collect();
    asm.add(&id4, &oscillator, p.hbar_omega.0);

    let x = basis::coordinate(basis, Mode::X);
    let y = basis::coordinate(basis, Mode::Y);
    asm.add(&product(&sz, &s0), &x, p.f_u.0);
    asm.add(&product(&sx, &s0), &y, p.f_u.0);
    asm.add(&product(&s0, &sz), &x, p.f_g.0);
    asm.add(&product(&s0, &sx), &y, p.f_g.0);

    if p.quad_g.0 != 0.0 {
        let x2 = basis::coordinate_squared(basis, Mode::X);
        let y2 = basis::coordinate_squared(basis, Mode::Y);
        let xy = basis::coordinate_product(basis);
        for doublet_z in [product(&sz, &s0), product(&s0, &sz)] {
            asm.add(&doublet_z, &x2, p.quad_g.0);
            asm.add(&doublet_z, &y2, -p.quad_g.0);
        }
        for doublet_x in [product(&sx, &s0), product(&s0, &sx)] {
            asm.add(&doublet_x, &xy, 2.0 * p.quad_g.0);
        }
    }

    let identity: Vec<_> = (0..db).map(|i| (i, i, 1.0)).collect();
    let w = electronic_splitting(p.lambda.0, p.xi.0).map(|v| C::new(v, 0.0));
    asm.add(&w, &identity, 1.0);

    if include_so && m_s != SpinProjection::Zero {
        let (lu, lg) = match (p.lambda_u, p.lambda_g) {
            (Some(u), Some(g)) => (u.to_mev().0, g.to_mev().0),
            _ => {
                return Err(Error::Validation(format!(
                    "spin-orbit requested at {} but lambda_u/lambda_g are missing",
                    p.label
                )))
            }
        };
        let ms = m_s.value();
        asm.add(&product(&sy, &s0), &identity, ms * lu / 2.0);
        asm.add(&product(&s0, &sy), &identity, ms * lg / 2.0);
    }

    if basis.n_max() == 0 && (p.f_g.0 != 0.0 || p.f_u.0 != 0.0 || p.quad_g.0 != 0.0) {
        warnings.push(
            "n_max = 0 truncates the vibronic coupling; only the electronic problem remains".into(),
        );
    }

    let complex = SparseOperator::from_triplets(4 * db, asm.triplets, true);
    let matrix = match complex.to_real() {
        Some(real) => HamiltonianMatrix::Real(real),
        None => HamiltonianMatrix::Complex(complex),
    };
    Ok(VibronicHamiltonian {
        matrix,
        basis: basis.clone(),
        m_s,
        include_so,
        warnings,
    })
}

/// Diagonal of the vertical-mirror operator, (sigma_z x sigma_z) on the
/// orbitals times (-1)^{n_y} on the phonon.
pub fn mirror_parity(basis: &FockBasis) -> Vec<f64> {
    let db = basis.dim();
    let mut out = Vec::with_capacity(4 * db);
    for e in 0..4 {
        let el = if e == 0 || e == 3 { 1.0 } else { -1.0 };
        for &(_, ny) in basis.states() {
            out.push(if ny % 2 == 0 { el } else { -el });
        }
    }
    out
}

/// Applies an electronic operator (x) identity on the phonon.
pub fn apply_electronic<T: Scalar>(op: &Matrix4<C>, v: &DVector<T>, boson_dim: usize) -> DVector<C> {
    let mut out = DVector::from_element(v.len(), ZERO);
    for e1 in 0..4 {
        for e2 in 0..4 {
            let m = op[(e1, e2)];
            if m == ZERO {
                continue;
            }
            for b in 0..boson_dim {
                out[e1 * boson_dim + b] += m * v[e2 * boson_dim + b].to_complex();
            }
        }
    }
    out
}

/// sigma_y on the e_u doublet.
pub fn orbital_y_u() -> Matrix4<C> {
    product(&pauli_y(), &pauli_0())
}

/// sigma_y on the e_g doublet.
pub fn orbital_y_g() -> Matrix4<C> {
    product(&pauli_0(), &pauli_y())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{Ghz, StrainLabel};

    fn params(fg: f64, fu: f64, w: f64, l: f64, xi: f64) -> PjtParams {
        PjtParams::new(StrainLabel::PressureGpa(0.0), fg, fu, w, l, xi).unwrap()
    }

    #[test]
    fn splitting_is_diagonal_in_adapted_basis() {
        use electronic::*;
        let w = electronic_splitting(81.94, 52.52);
        let expect = [(SYMMETRIC, 81.94), (ANTISYMMETRIC, -81.94), (E_X, -52.52), (E_Y, -52.52)];
        for (v, e) in expect {
            let v = nalgebra::Vector4::from(v);
            let wv = w * v;
            assert!((wv - v * e).amax() < 1e-12);
        }
    }

    #[test]
    fn dimension_and_hermiticity() {
        let b = FockBasis::new(2);
        let h = build_hamiltonian(&params(103.96, 95.61, 77.39, 81.94, 52.52), &b, SpinProjection::Zero, false)
            .unwrap();
        assert_eq!(h.matrix.dim(), 24);
        assert!(h.matrix.hermiticity_error() < 1e-12);
        assert!(h.matrix.as_real().is_some());
        assert!(h.warnings.is_empty());
    }

    #[test]
    fn spin_orbit_makes_matrix_complex() {
        let b = FockBasis::new(3);
        let p = params(10.0, 8.0, 70.0, 5.0, 3.0).with_spin_orbit(Ghz(100.0), Ghz(20.0));
        let h = build_hamiltonian(&p, &b, SpinProjection::Plus, true).unwrap();
        assert!(h.matrix.as_complex().is_some());
        assert!(h.matrix.hermiticity_error() < 1e-12);
        let h0 = build_hamiltonian(&p, &b, SpinProjection::Zero, true).unwrap();
        assert!(h0.matrix.as_real().is_some());
        let missing = params(1.0, 1.0, 70.0, 1.0, 1.0);
        assert!(build_hamiltonian(&missing, &b, SpinProjection::Plus, true).is_err());
    }

    #[test]
    fn truncation_warning() {
        let h = build_hamiltonian(&params(10.0, 5.0, 70.0, 1.0, 1.0), &FockBasis::new(0), SpinProjection::Zero, false)
            .unwrap();
        assert_eq!(h.warnings.len(), 1);
    }

    #[test]
    fn mirror_commutes_with_hamiltonian() {
        let b = FockBasis::new(6);
        let p = params(30.0, 20.0, 70.0, 10.0, 5.0).with_quadratic(crate::units::Mev(2.0));
        let h = build_hamiltonian(&p, &b, SpinProjection::Zero, false).unwrap();
        let h = h.matrix.as_real().unwrap();
        let s = mirror_parity(&b);
        for (r, c, v) in h.entries() {
            // [S, H] = 0 with S diagonal means S_r = S_c wherever H_rc != 0
            assert_eq!(s[r] * v, v * s[c], "entry ({r},{c})");
        }
    }

    #[test]
    fn oscillator_diagonal() {
        let b = FockBasis::new(3);
        let h = build_hamiltonian(&params(0.0, 0.0, 77.39, 0.0, 0.0), &b, SpinProjection::Zero, false).unwrap();
        let h = h.matrix.as_real().unwrap();
        for e in 0..4 {
            for (i, &(nx, ny)) in b.states().iter().enumerate() {
                let k = e * b.dim() + i;
                assert!((h.get(k, k) - 77.39 * (nx + ny + 1) as f64).abs() < 1e-12);
            }
        }
        assert_eq!(h.nnz(), 4 * b.dim());
    }
}
