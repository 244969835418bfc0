//! Square-lattice GKP codes with finite-energy envelope.
//!
//! Codewords are built directly from the position-space definition: the
//! ideal Dirac comb `sum_j |q = 2 sqrt(pi) (j + mu/2)>` is expanded in
//! Hermite functions and damped by the envelope `E = exp(-Delta^2 n)`, then
//! normalized. Stabilizers and logicals are displacement exponentials:
//! `S_q = exp(i 2 sqrt(pi) q) = D(i sqrt(2 pi))`,
//! `S_p = exp(-i 2 sqrt(pi) p) = D(sqrt(2 pi))`,
//! `X_L = exp(-i sqrt(pi) p) = D(sqrt(pi/2))`,
//! `Z_L = exp(i sqrt(pi) q) = D(i sqrt(pi/2))`.
//!
//! The comb offset convention fixes `|1_Delta>` at `q = 2 sqrt(pi)(j + 1/2)`
//! with positive real position-space weights; logical-Y states depend on
//! this phase choice.

use std::f64::consts::PI;

use crate::error::{CoreError, Result};
use crate::fock::{displacement, FockOperator, OscillatorState, DEFAULT_INTERIOR_MARGIN};
use crate::{C64, CVector};

/// Stabilizer translation length in quadrature units, `l = 2 sqrt(pi)`.
pub fn lattice_length() -> f64 {
    2.0 * PI.sqrt()
}

/// Square-lattice GKP code descriptor at envelope `Delta` and truncation `dim`.
#[derive(Debug, Clone)]
pub struct GkpCode {
    pub delta: f64,
    pub dim: usize,
    codewords: [CVector; 2],
    stabilizer_q: FockOperator,
    stabilizer_p: FockOperator,
    logical_x: FockOperator,
    logical_z: FockOperator,
    envelope: FockOperator,
    /// normalization constants `N = 1 / || E |mu_0> ||` of the raw combs
    norm_consts: [f64; 2],
    /// population in the top `margin` Fock levels of each codeword
    tail_weights: [f64; 2],
    codeword_overlap: f64,
}

/// Spec'd default truncation per envelope size.
pub fn default_dim(delta: f64) -> usize {
    if delta >= 0.3 {
        60
    } else if delta >= 0.2 {
        100
    } else {
        240
    }
}

/// Pauli and Hadamard eigenstate labels accepted by [`logical_state`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogicalLabel {
    Zero,
    One,
    Plus,
    Minus,
    PlusY,
    MinusY,
    PlusH,
    MinusH,
}

impl std::str::FromStr for LogicalLabel {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "0" => LogicalLabel::Zero,
            "1" => LogicalLabel::One,
            "+" => LogicalLabel::Plus,
            "-" => LogicalLabel::Minus,
            "+i" | "+Y" | "+y" => LogicalLabel::PlusY,
            "-i" | "-Y" | "-y" => LogicalLabel::MinusY,
            "+H" | "+h" => LogicalLabel::PlusH,
            "-H" | "-h" => LogicalLabel::MinusH,
            other => return Err(CoreError::UnknownLabel(other.into())),
        })
    }
}

/// Hermite functions `psi_0..psi_{nmax-1}` at position `x` (`hbar = 1`,
/// `q = (a + adag)/sqrt(2)` convention).
pub(crate) fn hermite_functions(nmax: usize, x: f64) -> Vec<f64> {
    let mut psi = vec![0.0; nmax];
    psi[0] = PI.powf(-0.25) * (-x * x / 2.0).exp();
    if nmax > 1 {
        psi[1] = 2f64.sqrt() * x * psi[0];
    }
    for n in 1..nmax.saturating_sub(1) {
        psi[n + 1] = (2.0 / (n as f64 + 1.0)).sqrt() * x * psi[n]
            - (n as f64 / (n as f64 + 1.0)).sqrt() * psi[n - 1];
    }
    psi
}

/// Unnormalized envelope-damped comb amplitudes for codeword `mu`.
fn raw_codeword(dim: usize, delta: f64, mu: usize) -> Vec<f64> {
    let d2 = delta * delta;
    let l = lattice_length();
    let mut c = vec![0.0f64; dim];
    // grow the comb symmetrically until added weight is negligible
    let mut j: i64 = 0;
    loop {
        let mut added = 0.0f64;
        let offsets: &[i64] = if j == 0 { &[0] } else { &[j, -j] };
        for &jj in offsets {
            let q = l * (jj as f64 + mu as f64 / 2.0);
            let psi = hermite_functions(dim, q);
            for n in 0..dim {
                let v = (-d2 * n as f64).exp() * psi[n];
                c[n] += v;
                added += v * v;
            }
        }
        let total: f64 = c.iter().map(|x| x * x).sum();
        if j > 2 && (added < 1e-14 * total.max(1e-300) || j > 64) {
            break;
        }
        j += 1;
    }
    c
}

/// Builds the code: codewords, stabilizers, logicals and diagnostics.
pub fn build_code(delta: f64, dim: usize) -> Result<GkpCode> {
    if !(delta > 0.0 && delta <= 0.6) {
        return Err(CoreError::InvalidParameter {
            name: "delta",
            reason: format!("envelope {delta} outside (0, 0.6]"),
        });
    }
    if dim < 8 {
        return Err(CoreError::InvalidDimension { dim, reason: "GKP codes need dim >= 8" });
    }

    let margin = DEFAULT_INTERIOR_MARGIN.min(dim / 4);
    let mut codewords = Vec::with_capacity(2);
    let mut norm_consts = [0.0f64; 2];
    let mut tail_weights = [0.0f64; 2];
    for mu in 0..2 {
        let raw = raw_codeword(dim, delta, mu);
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        norm_consts[mu] = 1.0 / norm;
        let tail: f64 =
            raw.iter().skip(dim - margin).map(|x| (x / norm) * (x / norm)).sum();
        tail_weights[mu] = tail;
        if tail > 1e-4 {
            // decay rate of |c_n|^2 is ~ e^{-2 Delta^2 n}
            let extra = ((tail / 1e-10).ln() / (2.0 * delta * delta)).ceil() as usize;
            return Err(CoreError::Truncation { dim, tail, suggested: dim + extra });
        }
        codewords.push(CVector::from_iterator(dim, raw.iter().map(|&x| C64::new(x / norm, 0.0))));
    }
    let codeword_overlap = codewords[0].dotc(&codewords[1]).re;

    let root_2pi = (2.0 * PI).sqrt();
    let root_pi_over_2 = (PI / 2.0).sqrt();
    let code = GkpCode {
        delta,
        dim,
        codewords: [codewords[0].clone(), codewords[1].clone()],
        stabilizer_q: displacement(C64::new(0.0, root_2pi), dim)?,
        stabilizer_p: displacement(C64::new(root_2pi, 0.0), dim)?,
        logical_x: displacement(C64::new(root_pi_over_2, 0.0), dim)?,
        logical_z: displacement(C64::new(0.0, root_pi_over_2), dim)?,
        envelope: FockOperator::from_diagonal_fn(dim, |n| {
            C64::new((-delta * delta * n as f64).exp(), 0.0)
        })?,
        norm_consts,
        tail_weights,
        codeword_overlap,
    };
    Ok(code)
}

impl GkpCode {
    pub fn codeword(&self, mu: usize) -> &CVector {
        &self.codewords[mu]
    }

    pub fn stabilizer_q(&self) -> &FockOperator {
        &self.stabilizer_q
    }

    pub fn stabilizer_p(&self) -> &FockOperator {
        &self.stabilizer_p
    }

    pub fn logical_x(&self) -> &FockOperator {
        &self.logical_x
    }

    pub fn logical_z(&self) -> &FockOperator {
        &self.logical_z
    }

    /// Diagonal envelope operator `exp(-Delta^2 n)`.
    pub fn envelope(&self) -> &FockOperator {
        &self.envelope
    }

    pub fn norm_const(&self, mu: usize) -> f64 {
        self.norm_consts[mu]
    }

    pub fn tail_weight(&self, mu: usize) -> f64 {
        self.tail_weights[mu]
    }

    /// `<0_Delta|1_Delta>` (real in this phase convention).
    pub fn codeword_overlap(&self) -> f64 {
        self.codeword_overlap
    }

    /// Symmetrically orthonormalized codeword pair (Loewdin), the canonical
    /// qubit basis closest to the raw non-orthogonal codewords.
    pub fn lowdin_codewords(&self) -> [CVector; 2] {
        lowdin_pair(&self.codewords[0], &self.codewords[1])
    }

    /// Expectation `<mu| op |mu>` in codeword `mu`.
    pub fn codeword_expectation(&self, op: &FockOperator, mu: usize) -> Result<C64> {
        let v = op.apply(&self.codewords[mu])?;
        Ok(self.codewords[mu].dotc(&v))
    }
}

/// Symmetric (Loewdin) orthonormalization of a possibly non-orthogonal pair.
pub fn lowdin_pair(a: &CVector, b: &CVector) -> [CVector; 2] {
    // Gram = [[1, s], [s*, 1]]; S^{-1/2} mixes with eigenvalues 1 +- |s|
    let s = a.dotc(b);
    let sn = s.norm();
    if sn < 1e-300 {
        return [a.clone(), b.clone()];
    }
    let u = s / C64::new(sn, 0.0);
    let wp = 1.0 / (1.0 + sn).sqrt();
    let wm = 1.0 / (1.0 - sn).sqrt();
    let cp = C64::new((wp + wm) / 2.0, 0.0);
    let cm = C64::new((wp - wm) / 2.0, 0.0);
    let oa = a * cp + b * (cm * u.conj());
    let ob = b * cp + a * (cm * u);
    [oa, ob]
}

/// Builds a Pauli or Hadamard eigenstate of the code.
///
/// Pauli eigenstates are normalized codeword superpositions (`|+Y> propto
/// |0> + i|1>` etc.). Hadamard eigenstates project the matching codeword
/// combination onto its exact Fock support (`n = 0 mod 4` for `+H`,
/// `n = 2 mod 4` for `-H`) and renormalize, which makes them exact Fourier
/// eigenvectors.
pub fn logical_state(code: &GkpCode, label: LogicalLabel) -> Result<OscillatorState> {
    let c0 = &code.codewords[0];
    let c1 = &code.codewords[1];
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let ket = match label {
        LogicalLabel::Zero => c0.clone(),
        LogicalLabel::One => c1.clone(),
        LogicalLabel::Plus => c0 + c1,
        LogicalLabel::Minus => c0 - c1,
        LogicalLabel::PlusY => c0 + c1 * i,
        LogicalLabel::MinusY => c0 - c1 * i,
        LogicalLabel::PlusH => {
            let t = PI / 8.0;
            let mut v = c0 * C64::new(t.cos(), 0.0) + c1 * C64::new(t.sin(), 0.0);
            for n in 0..v.len() {
                if n % 4 != 0 {
                    v[n] = C64::new(0.0, 0.0);
                }
            }
            v
        }
        LogicalLabel::MinusH => {
            let t = PI / 8.0;
            let mut v = c0 * C64::new(-t.sin(), 0.0) + c1 * C64::new(t.cos(), 0.0);
            for n in 0..v.len() {
                if n % 4 != 2 {
                    v[n] = C64::new(0.0, 0.0);
                }
            }
            v
        }
    };
    let _ = one;
    OscillatorState::from_ket(ket)
}

/// Max entrywise `|[op, E]|` against the code envelope. Diagonal `op`
/// commutes exactly; the cubic gate does not.
pub fn envelope_commutator_norm(code: &GkpCode, op: &FockOperator) -> Result<f64> {
    if op.dim() != code.dim {
        return Err(CoreError::DimensionMismatch { expected: code.dim, actual: op.dim() });
    }
    // E diagonal: [A, E][m,n] = A[m,n] (e_n - e_m)
    let d2 = code.delta * code.delta;
    let e: Vec<f64> = (0..code.dim).map(|n| (-d2 * n as f64).exp()).collect();
    let mut best = 0.0f64;
    for jn in 0..code.dim {
        for im in 0..code.dim {
            let v = op.data()[(im, jn)].norm() * (e[jn] - e[im]).abs();
            best = best.max(v);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;

    #[test]
    fn codewords_normalized_and_overlap_ordering() {
        let big = build_code(0.36, 60).unwrap();
        let small = build_code(0.25, 100).unwrap();
        for code in [&big, &small] {
            for mu in 0..2 {
                assert!((code.codeword(mu).norm() - 1.0).abs() < 1e-10);
            }
        }
        // overlap grows with Delta
        assert!(big.codeword_overlap().abs() > small.codeword_overlap().abs());
        // frozen fixtures (rebuilt from the Hermite-comb construction)
        assert!((big.codeword_overlap() - 4.512e-3).abs() < 5e-5);
        assert!((small.codeword_overlap() - 6.414e-6).abs() < 1e-7);
    }

    #[test]
    fn mean_photon_matches_asymptotic() {
        let code = build_code(0.25, 100).unwrap();
        let s = logical_state(&code, LogicalLabel::Zero).unwrap();
        let want = 1.0 / (2.0 * 0.25 * 0.25) - 0.5;
        assert!((s.mean_photon() - want).abs() / want < 0.10);
    }

    #[test]
    fn envelope_entries() {
        let code = build_code(0.36, 60).unwrap();
        let e = code.envelope();
        assert!(e.is_diagonal());
        for n in 0..60 {
            let v = e.data()[(n, n)].re;
            assert!(v > 0.0 && v <= 1.0);
            assert!((v - (-0.36f64 * 0.36 * n as f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn stabilizer_expectations_real_positive_and_monotone() {
        let mut prev = 0.0;
        for (delta, dim) in [(0.36, 60), (0.25, 100), (0.15, 240)] {
            let code = build_code(delta, dim).unwrap();
            let sq = code.codeword_expectation(code.stabilizer_q(), 0).unwrap();
            let sp = code.codeword_expectation(code.stabilizer_p(), 0).unwrap();
            for s in [sq, sp] {
                assert!(s.im.abs() < 1e-9, "stabilizer expectation not real: {s}");
                assert!(s.re > 0.0);
            }
            assert!(sq.re > prev, "expected monotone increase toward 1 as Delta decreases");
            prev = sq.re;
        }
        assert!(prev < 1.0 + 1e-9);
    }

    #[test]
    fn logical_z_eigenvalue_improves_with_delta() {
        let big = build_code(0.36, 60).unwrap();
        let small = build_code(0.25, 100).unwrap();
        let zb = big.codeword_expectation(big.logical_z(), 0).unwrap();
        let zs = small.codeword_expectation(small.logical_z(), 0).unwrap();
        assert!(zb.im.abs() < 1e-9 && zs.im.abs() < 1e-9);
        assert!((zb.re - 1.0).abs() > (zs.re - 1.0).abs());
        // fixtures computed independently from the position-space quadrature
        // of |psi(q)|^2 e^{i sqrt(pi) q}
        assert!((zb.re - 0.903370).abs() < 1e-4, "Z_L expectation at 0.36: {}", zb.re);
        assert!((zs.re - 0.952108).abs() < 1e-4, "Z_L expectation at 0.25: {}", zs.re);
    }

    #[test]
    fn hadamard_eigenstates_have_exact_fock_support() {
        let code = build_code(0.25, 100).unwrap();
        let hp = logical_state(&code, LogicalLabel::PlusH).unwrap();
        let hm = logical_state(&code, LogicalLabel::MinusH).unwrap();
        for (n, amp) in hp.ket().unwrap().iter().enumerate() {
            if n % 4 != 0 {
                assert_eq!(*amp, C64::new(0.0, 0.0));
            }
        }
        for (n, amp) in hm.ket().unwrap().iter().enumerate() {
            if n % 4 != 2 {
                assert_eq!(*amp, C64::new(0.0, 0.0));
            }
        }
        // Fourier gate eigenvalues +1 / -1
        let f = gates::fourier_gate(100).unwrap();
        let fp = hp.apply(&f).unwrap();
        let fm = hm.apply(&f).unwrap();
        let ev_p = hp.ket().unwrap().dotc(fp.ket().unwrap());
        let ev_m = hm.ket().unwrap().dotc(fm.ket().unwrap());
        assert!((ev_p - C64::new(1.0, 0.0)).norm() < 1e-9);
        assert!((ev_m - C64::new(-1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn plus_y_normalized() {
        let code = build_code(0.36, 60).unwrap();
        let s = logical_state(&code, LogicalLabel::PlusY).unwrap();
        assert!((s.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn codewords_two_fold_symmetric() {
        // both codewords are +1 eigenstates of the parity e^{i pi n}
        for (delta, dim) in [(0.36, 60), (0.25, 100)] {
            let code = build_code(delta, dim).unwrap();
            let parity = FockOperator::from_diagonal_fn(dim, |n| {
                if n % 2 == 0 { C64::new(1.0, 0.0) } else { C64::new(-1.0, 0.0) }
            })
            .unwrap();
            for mu in 0..2 {
                let ev = code.codeword_expectation(&parity, mu).unwrap();
                assert!((ev - C64::new(1.0, 0.0)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn envelope_commutators() {
        let code = build_code(0.25, 100).unwrap();
        let (_, _, num) = crate::fock::ladder_ops(100).unwrap();
        let n2 = num.mul(&num).unwrap();
        assert_eq!(envelope_commutator_norm(&code, &n2).unwrap(), 0.0);
        let id = FockOperator::identity(100).unwrap();
        assert_eq!(envelope_commutator_norm(&code, &id).unwrap(), 0.0);
        let cubic = gates::cubic_gate(100, gates::DEFAULT_CUBIC_COEFFS).unwrap();
        assert!(envelope_commutator_norm(&code, &cubic).unwrap() > 1e-3);
    }

    #[test]
    fn fourier_acts_as_hadamard_after_lowdin() {
        // 2x2 matrix of the Fourier gate in the orthonormalized codeword
        // basis approaches Hadamard as Delta decreases
        let mut prev = f64::INFINITY;
        for (delta, dim, bound) in [(0.36, 60, 2e-2), (0.25, 100, 3e-4)] {
            let code = build_code(delta, dim).unwrap();
            let [o0, o1] = code.lowdin_codewords();
            let f = gates::fourier_gate(dim).unwrap();
            let m = [
                [o0.dotc(&f.apply(&o0).unwrap()), o0.dotc(&f.apply(&o1).unwrap())],
                [o1.dotc(&f.apply(&o0).unwrap()), o1.dotc(&f.apply(&o1).unwrap())],
            ];
            let r = 1.0 / 2f64.sqrt();
            let h = [[r, r], [r, -r]];
            // global phase from the largest entry
            let phase = m[0][0] / C64::new(m[0][0].norm(), 0.0);
            let mut defect = 0.0f64;
            for a in 0..2 {
                for b in 0..2 {
                    defect = defect.max((m[a][b] / phase - C64::new(h[a][b], 0.0)).norm());
                }
            }
            assert!(defect < bound, "Hadamard defect {defect} at delta {delta}");
            assert!(defect < prev);
            prev = defect;
        }
    }

    #[test]
    fn truncation_error_reports_suggestion() {
        match build_code(0.36, 20) {
            Err(CoreError::Truncation { suggested, .. }) => assert!(suggested > 20),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_label_rejected() {
        assert!("xyz".parse::<LogicalLabel>().is_err());
        assert!("+H".parse::<LogicalLabel>().is_ok());
    }
}
