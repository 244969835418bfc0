//! Oscillator states: pure kets and density matrices with trace bookkeeping.

use crate::error::{CoreError, Result};
use crate::{C64, CMatrix, CVector};

use super::{hermitian_eigen, min_eigenvalue, FockOperator};

#[derive(Debug, Clone)]
enum Repr {
    Ket(CVector),
    Density(CMatrix),
}

/// Pure ket or density matrix on the truncated Fock space.
///
/// `weight` records the retained probability of unnormalized post-selected
/// states; it is 1 for ordinary states, and the density-matrix trace (or
/// squared ket norm) is kept equal to it.
#[derive(Debug, Clone)]
pub struct OscillatorState {
    repr: Repr,
    weight: f64,
}

impl OscillatorState {
    /// Normalized pure state from a ket; fails on zero or non-finite input.
    pub fn from_ket(ket: CVector) -> Result<Self> {
        if ket.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CoreError::NonFinite { context: "ket amplitudes" });
        }
        let n = ket.norm();
        if n < 1e-300 {
            return Err(CoreError::InvalidParameter {
                name: "ket",
                reason: "zero norm".into(),
            });
        }
        Ok(Self { repr: Repr::Ket(ket / C64::new(n, 0.0)), weight: 1.0 })
    }

    /// Density matrix with its trace as the recorded weight. Checks
    /// Hermiticity to 1e-12; positivity is checked by [`Self::min_eigenvalue`]
    /// on demand.
    pub fn from_density(rho: CMatrix) -> Result<Self> {
        let dim = rho.nrows();
        if rho.ncols() != dim {
            return Err(CoreError::DimensionMismatch { expected: dim, actual: rho.ncols() });
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CoreError::NonFinite { context: "density matrix" });
        }
        let mut herm = 0.0f64;
        for j in 0..dim {
            for i in 0..=j {
                herm = herm.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
            }
        }
        if herm > 1e-12 {
            return Err(CoreError::InvalidParameter {
                name: "density",
                reason: format!("Hermiticity defect {herm:.3e} exceeds 1e-12"),
            });
        }
        let tr: C64 = (0..dim).map(|i| rho[(i, i)]).sum();
        Ok(Self { repr: Repr::Density(rho), weight: tr.re })
    }

    /// Density matrix carrying an explicit post-selection weight.
    pub fn from_density_weighted(rho: CMatrix, weight: f64) -> Result<Self> {
        let mut s = Self::from_density(rho)?;
        s.weight = weight;
        Ok(s)
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::fock(dim, 0)
    }

    pub fn fock(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(CoreError::InvalidDimension { dim, reason: "Fock index beyond truncation" });
        }
        let mut v = CVector::zeros(dim);
        v[n] = C64::new(1.0, 0.0);
        Self::from_ket(v)
    }

    /// Coherent state from the analytic amplitudes `e^{-|a|^2/2} a^n/sqrt(n!)`.
    pub fn coherent(dim: usize, alpha: C64) -> Result<Self> {
        let mut v = CVector::zeros(dim);
        let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        v[0] = c;
        for n in 1..dim {
            c = c * alpha / C64::new((n as f64).sqrt(), 0.0);
            v[n] = c;
        }
        Self::from_ket(v)
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Ket(v) => v.len(),
            Repr::Density(m) => m.nrows(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Ket(_))
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn ket(&self) -> Option<&CVector> {
        match &self.repr {
            Repr::Ket(v) => Some(v),
            Repr::Density(_) => None,
        }
    }

    /// Trace of the density matrix (squared norm for kets).
    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Ket(v) => v.norm_squared(),
            Repr::Density(m) => (0..m.nrows()).map(|i| m[(i, i)].re).sum(),
        }
    }

    /// Dense density-matrix view of the state.
    pub fn density(&self) -> CMatrix {
        match &self.repr {
            Repr::Ket(v) => v * v.adjoint(),
            Repr::Density(m) => m.clone(),
        }
    }

    /// `Tr rho^2 / (Tr rho)^2`.
    pub fn purity(&self) -> f64 {
        match &self.repr {
            Repr::Ket(_) => 1.0,
            Repr::Density(m) => {
                let tr = self.trace();
                let tr2: f64 = (m * m).diagonal().iter().map(|z| z.re).sum();
                tr2 / (tr * tr)
            }
        }
    }

    /// Rescales to unit trace, resetting the weight to 1.
    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr < 1e-300 {
            return Err(CoreError::Undecodable(tr));
        }
        let repr = match &self.repr {
            Repr::Ket(v) => Repr::Ket(v / C64::new(tr.sqrt(), 0.0)),
            Repr::Density(m) => Repr::Density(m / C64::new(tr, 0.0)),
        };
        Ok(Self { repr, weight: 1.0 })
    }

    /// Applies an operator: `U psi` for kets, `U rho U^dag` for densities.
    pub fn apply(&self, op: &FockOperator) -> Result<Self> {
        if op.dim() != self.dim() {
            return Err(CoreError::DimensionMismatch { expected: self.dim(), actual: op.dim() });
        }
        let repr = match &self.repr {
            Repr::Ket(v) => Repr::Ket(op.data() * v),
            Repr::Density(m) => Repr::Density(op.data() * m * op.data().adjoint()),
        };
        Ok(Self { repr, weight: self.weight })
    }

    /// `Tr(op rho)` (not normalized by the trace).
    pub fn expectation(&self, op: &FockOperator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(CoreError::DimensionMismatch { expected: self.dim(), actual: op.dim() });
        }
        Ok(match &self.repr {
            Repr::Ket(v) => {
                let w = op.data() * v;
                v.dotc(&w)
            }
            Repr::Density(m) => {
                let mut s = C64::new(0.0, 0.0);
                // Tr(op * rho) = sum_{i,k} op[i,k] rho[k,i]
                for i in 0..m.nrows() {
                    for k in 0..m.ncols() {
                        s += op.data()[(i, k)] * m[(k, i)];
                    }
                }
                s
            }
        })
    }

    /// Photon-number populations `<n|rho|n>`.
    pub fn photon_distribution(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Ket(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            Repr::Density(m) => (0..m.nrows()).map(|i| m[(i, i)].re).collect(),
        }
    }

    pub fn mean_photon(&self) -> f64 {
        let p = self.photon_distribution();
        let tr: f64 = p.iter().sum();
        p.iter().enumerate().map(|(n, w)| n as f64 * w).sum::<f64>() / tr
    }

    /// Fidelity `<psi_t|rho|psi_t> / Tr rho` against a pure target.
    pub fn fidelity_to_pure(&self, target: &CVector) -> Result<f64> {
        if target.len() != self.dim() {
            return Err(CoreError::DimensionMismatch { expected: self.dim(), actual: target.len() });
        }
        let f = match &self.repr {
            Repr::Ket(v) => target.dotc(v).norm_sqr() / v.norm_squared(),
            Repr::Density(m) => {
                let w = m * target;
                target.dotc(&w).re / self.trace()
            }
        };
        Ok(f)
    }

    /// Smallest eigenvalue of the density matrix (0 is exact positivity).
    pub fn min_eigenvalue(&self) -> f64 {
        match &self.repr {
            Repr::Ket(_) => 0.0,
            Repr::Density(m) => min_eigenvalue(m),
        }
    }

    /// Trace distance `1/2 ||rho - sigma||_1` between normalized states.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if other.dim() != self.dim() {
            return Err(CoreError::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        let d = self.normalized()?.density() - other.normalized()?.density();
        let (vals, _) = hermitian_eigen(&d);
        Ok(0.5 * vals.iter().map(|x| x.abs()).sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ket_normalization() {
        let v = CVector::from_vec(vec![C64::new(3.0, 0.0), C64::new(0.0, 4.0)]);
        let s = OscillatorState::from_ket(v).unwrap();
        assert!((s.trace() - 1.0).abs() < 1e-12);
        assert!(s.is_pure());
    }

    #[test]
    fn coherent_mean_photon() {
        let alpha = C64::new(1.2, -0.4);
        let s = OscillatorState::coherent(50, alpha).unwrap();
        assert!((s.mean_photon() - alpha.norm_sqr()).abs() < 1e-9);
    }

    #[test]
    fn density_roundtrip_and_purity() {
        let s = OscillatorState::fock(6, 2).unwrap();
        let rho = OscillatorState::from_density(s.density()).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!(rho.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn mixed_state_trace_distance() {
        let a = OscillatorState::fock(4, 0).unwrap();
        let b = OscillatorState::fock(4, 1).unwrap();
        let mixed =
            OscillatorState::from_density(a.density() * C64::new(0.5, 0.0) + b.density() * C64::new(0.5, 0.0))
                .unwrap();
        assert!((mixed.purity() - 0.5).abs() < 1e-12);
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-12);
        assert!((a.trace_distance(&mixed).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_density_rejected() {
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 1)] = C64::new(0.5, 0.0);
        assert!(OscillatorState::from_density(m).is_err());
    }
}
