//! Logical gates on the oscillator and their 2x2 targets.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};

use crate::error::{CoreError, Result};
use crate::fock::{hermitian_eigen, position_op, FockOperator, DEFAULT_INTERIOR_MARGIN};
use crate::{C64, CMatrix};

/// Kerr unitary `exp(i pi n^2 / 8)`, the logical sqrt-Hadamard of square GKP
/// codes. Diagonal, so it commutes exactly with the code envelope.
pub fn kerr_unitary(dim: usize) -> Result<FockOperator> {
    if dim < 2 {
        return Err(CoreError::InvalidDimension { dim, reason: "kerr unitary needs dim >= 2" });
    }
    FockOperator::from_diagonal_fn(dim, |n| {
        // phase pi n^2 / 8, reduced mod 16 to keep the argument small
        let r = (n * n) % 16;
        (C64::new(0.0, 1.0) * (PI * r as f64 / 8.0)).exp()
    })
}

/// Fourier gate `exp(i pi n / 2) = diag(i^n)`, the logical Hadamard.
pub fn fourier_gate(dim: usize) -> Result<FockOperator> {
    if dim < 2 {
        return Err(CoreError::InvalidDimension { dim, reason: "fourier gate needs dim >= 2" });
    }
    FockOperator::from_diagonal_fn(dim, |n| C64::new(0.0, 1.0).powu((n % 4) as u32))
}

/// Default cubic polynomial `phi(q) = c1 q + c2 q^2 + c3 q^3` realizing the
/// square-lattice T gate: `(q^3/(2 sqrt(pi)) + q^2/4 - sqrt(pi) q / 2)`.
pub const DEFAULT_CUBIC_COEFFS: [f64; 3] = [
    -0.886_226_925_452_758, // -sqrt(pi)/2
    0.25,
    0.282_094_791_773_878_14, // 1/(2 sqrt(pi))
];

/// Cubic comparison gate `exp(i phi(q))` with `phi(q) = c[0] q + c[1] q^2 +
/// c[2] q^3`, built by diagonalizing the truncated position operator.
///
/// Unlike the Kerr gate this does not commute with the envelope. The
/// returned operator's `interior_margin` widens when the polynomial's phase
/// gradient at the truncation edge is large (the truncation warning).
pub fn cubic_gate(dim: usize, coeffs: [f64; 3]) -> Result<FockOperator> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(CoreError::NonFinite { context: "cubic coefficients" });
    }
    let q = position_op(dim)?;
    let (vals, vecs) = hermitian_eigen(q.data());
    let mut d = CMatrix::zeros(dim, dim);
    for (k, &x) in vals.iter().enumerate() {
        let phi = coeffs[0] * x + coeffs[1] * x * x + coeffs[2] * x * x * x;
        d[(k, k)] = (C64::new(0.0, 1.0) * phi).exp();
    }
    let u = &vecs * d * vecs.adjoint();
    // phase gradient phi'(q_edge) 'uses up' momentum range; widen the margin
    // when it is a large fraction of the resolvable radius
    let q_edge = (2.0 * dim as f64).sqrt();
    let grad = (coeffs[0] + 2.0 * coeffs[1] * q_edge + 3.0 * coeffs[2] * q_edge * q_edge).abs();
    let margin = if grad > 0.5 * q_edge {
        (dim / 4).max(DEFAULT_INTERIOR_MARGIN)
    } else {
        DEFAULT_INTERIOR_MARGIN
    };
    Ok(FockOperator::new(u, margin.min(dim / 2))?)
}

/// Named 2x2 unitary target on the logical qubit.
#[derive(Debug, Clone)]
pub struct LogicalTarget {
    pub name: &'static str,
    pub matrix: Matrix2<C64>,
}

impl LogicalTarget {
    pub fn apply(&self, v: &Vector2<C64>) -> Vector2<C64> {
        self.matrix * v
    }

    pub fn unitarity_defect(&self) -> f64 {
        let g = self.matrix.adjoint() * self.matrix;
        let id = Matrix2::identity();
        (g - id).iter().map(|z: &C64| z.norm()).fold(0.0, f64::max)
    }
}

/// sqrt-Hadamard with the global phase fixed so that
/// `sqrtH |+H> = |+H>` and `sqrtH |-H> = i |-H>` hold verbatim:
/// `e^{i pi/4} [cos(pi/4) I - i sin(pi/4) (sx + sz)/sqrt(2)]`.
pub fn sqrt_h_target() -> LogicalTarget {
    let c = C64::new(0.0, 1.0); // i
    let phase = (C64::new(0.0, 1.0) * (PI / 4.0)).exp();
    let cos = C64::new((PI / 4.0).cos(), 0.0);
    let msin = -c * (PI / 4.0).sin();
    let r = 1.0 / 2f64.sqrt();
    // (sx + sz)/sqrt(2)
    let hx = Matrix2::new(
        C64::new(r, 0.0),
        C64::new(r, 0.0),
        C64::new(r, 0.0),
        C64::new(-r, 0.0),
    );
    let m = (Matrix2::identity() * cos + hx * msin) * phase;
    LogicalTarget { name: "sqrtH", matrix: m }
}

/// Hadamard as a qubit matrix.
pub fn hadamard_target() -> LogicalTarget {
    let r = 1.0 / 2f64.sqrt();
    LogicalTarget {
        name: "H",
        matrix: Matrix2::new(
            C64::new(r, 0.0),
            C64::new(r, 0.0),
            C64::new(r, 0.0),
            C64::new(-r, 0.0),
        ),
    }
}

/// T gate as a qubit matrix.
pub fn t_target() -> LogicalTarget {
    LogicalTarget {
        name: "T",
        matrix: Matrix2::new(
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            (C64::new(0.0, 1.0) * (PI / 4.0)).exp(),
        ),
    }
}

/// Hadamard eigenvectors as qubit vectors: `|+H> = cos(pi/8)|0> + sin(pi/8)|1>`,
/// `|-H> = -sin(pi/8)|0> + cos(pi/8)|1>`.
pub fn hadamard_eigenvectors() -> [Vector2<C64>; 2] {
    let t = PI / 8.0;
    [
        Vector2::new(C64::new(t.cos(), 0.0), C64::new(t.sin(), 0.0)),
        Vector2::new(C64::new(-t.sin(), 0.0), C64::new(t.cos(), 0.0)),
    ]
}

/// The magic-state target `|H'> = sqrtH |+i>` as a qubit vector.
pub fn magic_state_target() -> Vector2<C64> {
    let r = C64::new(1.0 / 2f64.sqrt(), 0.0);
    let plus_i = Vector2::new(r, C64::new(0.0, 1.0) * r);
    sqrt_h_target().apply(&plus_i)
}

/// Gate time `t_K = pi / (4 |K|)` for Kerr rate `K` (angular frequency).
pub fn kerr_gate_time(kerr_rate: f64) -> Result<f64> {
    if kerr_rate == 0.0 || !kerr_rate.is_finite() {
        return Err(CoreError::InvalidParameter {
            name: "kerr_rate",
            reason: "need a finite nonzero Kerr rate".into(),
        });
    }
    Ok(PI / (4.0 * kerr_rate.abs()))
}

/// Hardware operating point: Kerr strength (as `K / 2 pi`, Hz) and cavity
/// lifetime. [`OperatingPoint::report`] derives gate time, loss rate and the
/// per-gate loss parameter; reference values supplied by the caller are
/// carried through untouched for comparison.
#[derive(Debug, Clone, Copy)]
pub struct OperatingPoint {
    pub kerr_over_2pi_hz: f64,
    pub cavity_t1_seconds: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct OperatingPointReport {
    pub gate_time_seconds: f64,
    pub kappa_per_second: f64,
    pub gamma: f64,
}

impl OperatingPoint {
    pub fn report(&self) -> Result<OperatingPointReport> {
        if self.cavity_t1_seconds <= 0.0 {
            return Err(CoreError::InvalidParameter {
                name: "cavity_t1_seconds",
                reason: "lifetime must be positive".into(),
            });
        }
        let k = 2.0 * PI * self.kerr_over_2pi_hz;
        let t_gate = kerr_gate_time(k)?;
        let kappa = 1.0 / self.cavity_t1_seconds;
        Ok(OperatingPointReport {
            gate_time_seconds: t_gate,
            kappa_per_second: kappa,
            gamma: 1.0 - (-kappa * t_gate).exp(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gkp::{build_code, logical_state, LogicalLabel};

    #[test]
    fn kerr_entries() {
        let u = kerr_unitary(8).unwrap();
        assert_eq!(u.data()[(0, 0)], C64::new(1.0, 0.0));
        // n = 2: e^{i pi 4/8} = i
        assert!((u.data()[(2, 2)] - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert!(u.unitarity_defect_interior() < 1e-14);
    }

    #[test]
    fn fourier_entries_and_square() {
        let dim = 12;
        let f = fourier_gate(dim).unwrap();
        assert_eq!(f.data()[(0, 0)], C64::new(1.0, 0.0));
        // fourier^2 = parity
        let f2 = f.mul(&f).unwrap();
        for n in 0..dim {
            let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((f2.data()[(n, n)] - C64::new(parity, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn kerr_eigenphases_on_hadamard_eigenstates() {
        let code = build_code(0.25, 100).unwrap();
        let u = kerr_unitary(100).unwrap();
        let hp = logical_state(&code, LogicalLabel::PlusH).unwrap();
        let hm = logical_state(&code, LogicalLabel::MinusH).unwrap();
        let up = hp.apply(&u).unwrap();
        let um = hm.apply(&u).unwrap();
        let ev_p = hp.ket().unwrap().dotc(up.ket().unwrap());
        let ev_m = hm.ket().unwrap().dotc(um.ket().unwrap());
        assert!((ev_p - C64::new(1.0, 0.0)).norm() < 1e-9, "U_K on |+H>: {ev_p}");
        assert!((ev_m - C64::new(0.0, 1.0)).norm() < 1e-9, "U_K on |-H>: {ev_m}");
    }

    #[test]
    fn kerr_squared_phases() {
        // U_K^2 is the evolution at time 2 t_K: e^{i pi n^2/4}, with
        // eigenphases {+1, -1} on |+H>, |-H> (no residual global factor)
        let code = build_code(0.36, 60).unwrap();
        let u = kerr_unitary(60).unwrap();
        let u2 = u.mul(&u).unwrap();
        let direct = FockOperator::from_diagonal_fn(60, |n| {
            (C64::new(0.0, 1.0) * (PI * ((n * n) % 8) as f64 / 4.0)).exp()
        })
        .unwrap();
        assert!(u2.max_abs_diff_interior(&direct, 0).unwrap() < 1e-13);
        let hp = logical_state(&code, LogicalLabel::PlusH).unwrap();
        let hm = logical_state(&code, LogicalLabel::MinusH).unwrap();
        let ev_p = hp.ket().unwrap().dotc(&u2.apply(hp.ket().unwrap()).unwrap());
        let ev_m = hm.ket().unwrap().dotc(&u2.apply(hm.ket().unwrap()).unwrap());
        assert!((ev_p - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((ev_m - C64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cubic_gate_identity_at_zero_coeffs() {
        let g = cubic_gate(24, [0.0, 0.0, 0.0]).unwrap();
        let id = FockOperator::identity(24).unwrap();
        assert!(g.max_abs_diff_interior(&id, 0).unwrap() < 1e-12);
    }

    #[test]
    fn cubic_gate_is_unitary() {
        let g = cubic_gate(60, DEFAULT_CUBIC_COEFFS).unwrap();
        assert!(g.unitarity_defect_interior() < 1e-10);
    }

    #[test]
    fn sqrt_h_eigenphases_exact() {
        let t = sqrt_h_target();
        assert!(t.unitarity_defect() < 1e-12);
        let [hp, hm] = hadamard_eigenvectors();
        let ap = t.apply(&hp);
        let am = t.apply(&hm);
        // phases {1, i}
        assert!((ap - hp).norm() < 1e-12);
        assert!((am - hm * C64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn sqrt_h_squares_to_hadamard() {
        let t = sqrt_h_target();
        let sq = t.matrix * t.matrix;
        let h = hadamard_target().matrix;
        // global phase from the largest entry
        let phase = sq[(0, 0)] / h[(0, 0)];
        let defect = (sq - h * phase).iter().map(|z: &C64| z.norm()).fold(0.0, f64::max);
        assert!(defect < 1e-12);
        // column overlaps have unit modulus
        for c in 0..2 {
            let overlap: C64 = (0..2).map(|r| sq[(r, c)].conj() * h[(r, c)]).sum();
            assert!((overlap.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kerr_loss_conjugation_identity() {
        // a photon loss commuted through the gate picks up the number
        // rotation: U_K a = e^{-i pi/8} e^{-i n pi/4} a U_K, exact in the
        // truncated algebra (phases: (n-1)^2 = n^2 - 2n + 1 mod 16)
        let dim = 100;
        let u = kerr_unitary(dim).unwrap();
        let (a, _, _) = crate::fock::ladder_ops(dim).unwrap();
        let lhs = u.mul(&a).unwrap();
        let rot = FockOperator::from_diagonal_fn(dim, |n| {
            (C64::new(0.0, -1.0) * (PI / 4.0) * C64::new(n as f64, 0.0)).exp()
        })
        .unwrap();
        let rhs = rot
            .mul(&a)
            .unwrap()
            .mul(&u)
            .unwrap()
            .scaled((C64::new(0.0, -1.0) * (PI / 8.0)).exp());
        assert!(lhs.max_abs_diff_interior(&rhs, 0).unwrap() < 1e-10);
    }

    #[test]
    fn kerr_commutes_with_envelope() {
        let code = build_code(0.25, 100).unwrap();
        let u = kerr_unitary(100).unwrap();
        assert_eq!(crate::gkp::envelope_commutator_norm(&code, &u).unwrap(), 0.0);
    }

    #[test]
    fn operating_point_arithmetic() {
        // K/2pi = -20 kHz, T1 = 610 us
        let op = OperatingPoint { kerr_over_2pi_hz: -20e3, cavity_t1_seconds: 610e-6 };
        let r = op.report().unwrap();
        assert!((r.gate_time_seconds - 6.25e-6).abs() < 1e-9);
        assert!((r.gamma - 1.0194e-2).abs() < 1e-5, "gamma {}", r.gamma);
    }

    #[test]
    fn gate_time_rejects_zero_rate() {
        assert!(kerr_gate_time(0.0).is_err());
    }
}
