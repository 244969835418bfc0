//! Truncated Fock-space linear algebra.
//!
//! Operators live on a dimension-`D` truncation of the oscillator Hilbert
//! space. Statements like "unitary" or "commutes" are only claimed on the
//! interior block (the first `D - interior_margin` rows and columns);
//! the last rows and columns absorb truncation artifacts.

mod hybrid;
mod state;
mod wigner;

pub use hybrid::{x_basis, HybridOperator, HybridState, RotationAxis};
pub use state::OscillatorState;
pub use wigner::{wigner, WignerGrid, WignerMeta};

use crate::error::{CoreError, Result};
use crate::{C64, CMatrix, CVector};

/// Default truncation-edge margin used by operator constructors.
pub const DEFAULT_INTERIOR_MARGIN: usize = 10;

/// Dense operator on the truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    dim: usize,
    interior_margin: usize,
    data: CMatrix,
}

impl FockOperator {
    /// Wraps a `dim x dim` matrix. Fails on non-square or non-finite input.
    pub fn new(data: CMatrix, interior_margin: usize) -> Result<Self> {
        let dim = data.nrows();
        if dim < 2 {
            return Err(CoreError::InvalidDimension { dim, reason: "operators need dim >= 2" });
        }
        if data.ncols() != dim {
            return Err(CoreError::DimensionMismatch { expected: dim, actual: data.ncols() });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CoreError::NonFinite { context: "operator entries" });
        }
        Ok(Self { dim, interior_margin, data })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(CMatrix::identity(dim, dim), 0)
    }

    /// Diagonal operator with entries `f(n)`.
    pub fn from_diagonal_fn(dim: usize, f: impl Fn(usize) -> C64) -> Result<Self> {
        let mut m = CMatrix::zeros(dim, dim);
        for n in 0..dim {
            m[(n, n)] = f(n);
        }
        Self::new(m, 0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn interior_margin(&self) -> usize {
        self.interior_margin
    }

    pub fn with_margin(mut self, margin: usize) -> Self {
        self.interior_margin = margin;
        self
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_data(self) -> CMatrix {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self { dim: self.dim, interior_margin: self.interior_margin, data: self.data.adjoint() }
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { dim: self.dim, interior_margin: self.interior_margin, data: &self.data * c }
    }

    /// Operator product `self * rhs`; margins combine as the maximum.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs.dim)?;
        Ok(Self {
            dim: self.dim,
            interior_margin: self.interior_margin.max(rhs.interior_margin),
            data: &self.data * &rhs.data,
        })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs.dim)?;
        Ok(Self {
            dim: self.dim,
            interior_margin: self.interior_margin.max(rhs.interior_margin),
            data: &self.data + &rhs.data,
        })
    }

    pub fn apply(&self, ket: &CVector) -> Result<CVector> {
        self.check_dim(ket.len())?;
        Ok(&self.data * ket)
    }

    pub fn is_diagonal(&self) -> bool {
        for j in 0..self.dim {
            for i in 0..self.dim {
                if i != j && self.data[(i, j)] != C64::new(0.0, 0.0) {
                    return false;
                }
            }
        }
        true
    }

    /// Max entrywise deviation from Hermiticity, `max |A - A^dag|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for j in 0..self.dim {
            for i in 0..=j {
                d = d.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        d
    }

    /// Max entrywise `|U^dag U - I|` restricted to the interior block.
    pub fn unitarity_defect_interior(&self) -> f64 {
        let g = self.data.adjoint() * &self.data;
        let k = self.dim.saturating_sub(self.interior_margin);
        let mut d = 0.0f64;
        for j in 0..k {
            for i in 0..k {
                let expect = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                d = d.max((g[(i, j)] - expect).norm());
            }
        }
        d
    }

    /// Max entrywise `|AB - BA|` over the full matrix.
    pub fn commutator_norm(&self, rhs: &Self) -> Result<f64> {
        self.check_dim(rhs.dim)?;
        let c = &self.data * &rhs.data - &rhs.data * &self.data;
        Ok(c.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// Max entrywise `|A - B|` restricted to the first `dim - margin` rows/cols.
    pub fn max_abs_diff_interior(&self, rhs: &Self, margin: usize) -> Result<f64> {
        self.check_dim(rhs.dim)?;
        let k = self.dim.saturating_sub(margin);
        let mut d = 0.0f64;
        for j in 0..k {
            for i in 0..k {
                d = d.max((self.data[(i, j)] - rhs.data[(i, j)]).norm());
            }
        }
        Ok(d)
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim != other {
            return Err(CoreError::DimensionMismatch { expected: self.dim, actual: other });
        }
        Ok(())
    }
}

/// Annihilation, creation and number operators: `a |n> = sqrt(n) |n-1>`,
/// `n = adag * a` exactly in the truncated basis.
pub fn ladder_ops(dim: usize) -> Result<(FockOperator, FockOperator, FockOperator)> {
    if dim < 2 {
        return Err(CoreError::InvalidDimension { dim, reason: "ladder operators need dim >= 2" });
    }
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let adag = a.adjoint();
    let num = &adag * &a;
    Ok((
        FockOperator::new(a, 1)?,
        FockOperator::new(adag, 1)?,
        FockOperator::new(num, 0)?,
    ))
}

/// Position quadrature `q = (a + adag)/sqrt(2)`.
pub fn position_op(dim: usize) -> Result<FockOperator> {
    let (a, adag, _) = ladder_ops(dim)?;
    Ok(a.add(&adag)?.scaled(C64::new(1.0 / 2f64.sqrt(), 0.0)))
}

/// Momentum quadrature `p = i (adag - a)/sqrt(2)`.
pub fn momentum_op(dim: usize) -> Result<FockOperator> {
    let (a, adag, _) = ladder_ops(dim)?;
    Ok(adag.add(&a.scaled(C64::new(-1.0, 0.0)))?.scaled(C64::new(0.0, 1.0 / 2f64.sqrt())))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.column_mut(k).copy_from(&eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub(crate) fn min_eigenvalue(m: &CMatrix) -> f64 {
    let eig = m.clone().symmetric_eigen();
    eig.eigenvalues.iter().fold(f64::INFINITY, |acc, &x| acc.min(x))
}

/// Displacement operator `D(alpha) = exp(alpha adag - alpha* a)` computed as
/// the matrix exponential of the truncated generator, which keeps it exactly
/// unitary on the whole truncated space. `D(alpha)|0>` is the coherent state
/// `|alpha>` up to truncation-edge corrections.
pub fn displacement(alpha: C64, dim: usize) -> Result<FockOperator> {
    if dim < 2 {
        return Err(CoreError::InvalidDimension { dim, reason: "displacement needs dim >= 2" });
    }
    // generator G = alpha adag - alpha* a is anti-Hermitian; exponentiate via
    // the Hermitian matrix M = -iG so that D = V e^{i lambda} V^dag.
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        let g = alpha * (n as f64).sqrt(); // (adag)[n, n-1] coefficient
        let entry = C64::new(0.0, -1.0) * g;
        m[(n, n - 1)] = entry;
        m[(n - 1, n)] = entry.conj();
    }
    let (vals, vecs) = hermitian_eigen(&m);
    let phases = CVector::from_iterator(dim, vals.iter().map(|&l| (C64::new(0.0, 1.0) * l).exp()));
    let d = &vecs * CMatrix::from_diagonal(&phases) * vecs.adjoint();
    // contamination near the truncation edge grows with |alpha|
    let margin = DEFAULT_INTERIOR_MARGIN.max((2.0 * alpha.norm() * (dim as f64).sqrt()).ceil() as usize);
    FockOperator::new(d, margin.min(dim / 2))
}

/// `true` when the truncation comfortably contains displaced states of this
/// amplitude (`|alpha|^2` well inside `dim`).
pub fn displacement_adequate(alpha: C64, dim: usize) -> bool {
    alpha.norm_sqr() * 4.0 < dim as f64
}

/// Matrix exponential `exp(scale * op)`.
///
/// Diagonal operators are exponentiated entrywise (exact); everything else
/// goes through Pade-13 scaling and squaring.
pub fn expm(op: &FockOperator, scale: C64) -> Result<FockOperator> {
    if !scale.re.is_finite() || !scale.im.is_finite() {
        return Err(CoreError::NonFinite { context: "expm scale" });
    }
    if op.is_diagonal() {
        let mut m = CMatrix::zeros(op.dim, op.dim);
        for n in 0..op.dim {
            m[(n, n)] = (scale * op.data[(n, n)]).exp();
        }
        return FockOperator::new(m, op.interior_margin);
    }
    let a = &op.data * scale;
    let e = expm_pade(&a)?;
    FockOperator::new(e, op.interior_margin)
}

/// Pade-13 scaling-and-squaring matrix exponential.
fn expm_pade(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(CoreError::NonFinite { context: "expm input" });
    }
    const THETA_13: f64 = 5.371_920_351_148_152;
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let a = a * C64::new(0.5f64.powi(s), 0.0);

    const B_RE: [f64; 14] = [
        64_764_752_532_480_000.0,
        32_382_376_266_240_000.0,
        7_771_770_303_897_600.0,
        1_187_353_796_428_800.0,
        129_060_195_264_000.0,
        10_559_470_521_600.0,
        670_442_572_800.0,
        33_522_128_640.0,
        1_323_241_920.0,
        40_840_800.0,
        960_960.0,
        16_380.0,
        182.0,
        1.0,
    ];
    let b: Vec<C64> = B_RE.iter().map(|&x| C64::new(x, 0.0)).collect();
    let id = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];
    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut r = lhs
        .lu()
        .solve(&rhs)
        .ok_or(CoreError::NonFinite { context: "expm Pade solve" })?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn one_norm(a: &CMatrix) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let mut s = 0.0;
        for i in 0..a.nrows() {
            s += a[(i, j)].norm();
        }
        best = best.max(s);
    }
    best
}

/// Result of a truncation-convergence check: the same scalar computed at
/// `dim` and `dim + step`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceReport {
    pub dim: usize,
    pub refined_dim: usize,
    pub value: f64,
    pub refined_value: f64,
    pub abs_diff: f64,
    pub converged: bool,
}

/// Recomputes a scalar at `dim` and `dim + step` and checks agreement within
/// `abs_tol + rel_tol * |value|`.
pub fn truncation_convergence<F>(
    f: F,
    dim: usize,
    step: usize,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<ConvergenceReport>
where
    F: Fn(usize) -> Result<f64>,
{
    let value = f(dim)?;
    let refined_dim = dim + step;
    let refined_value = f(refined_dim)?;
    let abs_diff = (value - refined_value).abs();
    Ok(ConvergenceReport {
        dim,
        refined_dim,
        value,
        refined_value,
        abs_diff,
        converged: abs_diff <= abs_tol + rel_tol * value.abs(),
    })
}

/// Evenly spaced grid including both endpoints.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / (n as f64 - 1.0);
    (0..n).map(|i| a + h * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_matrix_elements() {
        let (a, _, num) = ladder_ops(3).unwrap();
        // a maps |1> -> |0> with coefficient sqrt(1) = 1
        assert_eq!(a.data()[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(a.data()[(1, 2)], C64::new(2f64.sqrt(), 0.0));
        // n = adag a = diag(0, 1, 2) up to float products sqrt(n)^2
        for n in 0..3 {
            assert!((num.data()[(n, n)] - C64::new(n as f64, 0.0)).norm() < 4e-16 * (n as f64).max(1.0));
            for m in 0..3 {
                if m != n {
                    assert_eq!(num.data()[(m, n)], C64::new(0.0, 0.0));
                }
            }
        }
        assert!(ladder_ops(1).is_err());
    }

    #[test]
    fn ladder_commutator_is_identity_on_interior() {
        let dim = 8;
        let (a, adag, _) = ladder_ops(dim).unwrap();
        let comm = a.mul(&adag).unwrap().data() - adag.mul(&a).unwrap().data();
        for i in 0..dim - 1 {
            assert!((comm[(i, i)] - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
        // last diagonal entry deviates: 0 - dim-1... the truncation artifact
        assert!((comm[(dim - 1, dim - 1)].re - (1.0 - dim as f64)).abs() < 1e-12);
    }

    #[test]
    fn displacement_zero_is_identity() {
        let d = displacement(C64::new(0.0, 0.0), 12).unwrap();
        let id = FockOperator::identity(12).unwrap();
        assert!(d.max_abs_diff_interior(&id, 0).unwrap() < 1e-12);
    }

    #[test]
    fn coherent_state_overlap_with_vacuum() {
        // |<0|D(alpha)|0>|^2 = e^{-|alpha|^2}
        let alpha = C64::new(1.0, 0.0);
        let d = displacement(alpha, 40).unwrap();
        let got = d.data()[(0, 0)].norm_sqr();
        let want = (-alpha.norm_sqr()).exp();
        assert!((got - want).abs() < 1e-8, "got {got}, want {want}");
    }

    #[test]
    fn displacement_inverse() {
        let alpha = C64::new(0.5, 0.3);
        let dim = 30;
        let d = displacement(alpha, dim).unwrap();
        let dinv = displacement(-alpha, dim).unwrap();
        let prod = d.mul(&dinv).unwrap();
        let id = FockOperator::identity(dim).unwrap();
        assert!(prod.max_abs_diff_interior(&id, prod.interior_margin()).unwrap() < 1e-9);
        assert!(d.unitarity_defect_interior() < 1e-10);
    }

    #[test]
    fn expm_zero_is_identity() {
        let z = FockOperator::new(CMatrix::zeros(6, 6), 0).unwrap();
        let e = expm(&z, C64::new(1.0, 0.0)).unwrap();
        let id = FockOperator::identity(6).unwrap();
        assert!(e.max_abs_diff_interior(&id, 0).unwrap() < 1e-14);
    }

    #[test]
    fn expm_diagonal_rule() {
        // exp(i pi n / 2) = diag(i^n)
        let dim = 9;
        let (_, _, num) = ladder_ops(dim).unwrap();
        let e = expm(&num, C64::new(0.0, std::f64::consts::PI / 2.0)).unwrap();
        for n in 0..dim {
            let want = C64::new(0.0, 1.0).powu(n as u32);
            assert!((e.data()[(n, n)] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn expm_inverse_property_random_hermitian() {
        // deterministic pseudo-random Hermitian matrix, dim 16
        let dim = 16;
        let mut m = CMatrix::zeros(dim, dim);
        let mut s = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for j in 0..dim {
            for i in 0..=j {
                let z = C64::new(next(), if i == j { 0.0 } else { next() });
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        let op = FockOperator::new(m, 0).unwrap();
        let e = expm(&op, C64::new(1.0, 0.0)).unwrap();
        let einv = expm(&op, C64::new(-1.0, 0.0)).unwrap();
        let prod = e.mul(&einv).unwrap();
        let id = FockOperator::identity(dim).unwrap();
        assert!(prod.max_abs_diff_interior(&id, 0).unwrap() < 1e-10);
    }

    #[test]
    fn quadrature_commutator() {
        // [q, p] = i on the interior
        let dim = 24;
        let q = position_op(dim).unwrap();
        let p = momentum_op(dim).unwrap();
        let c = q.mul(&p).unwrap().data() - p.mul(&q).unwrap().data();
        for n in 0..dim - 2 {
            assert!((c[(n, n)] - C64::new(0.0, 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn convergence_report() {
        let f = |dim: usize| Ok(1.0 + 1.0 / dim as f64);
        let r = truncation_convergence(f, 100, 20, 1e-8, 1e-2).unwrap();
        assert!(r.converged);
        let r2 = truncation_convergence(f, 100, 20, 1e-9, 0.0).unwrap();
        assert!(!r2.converged);
    }
}
