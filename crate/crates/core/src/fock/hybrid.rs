//! Two-level ancilla coupled to the oscillator.
//!
//! Joint objects live on the 2D-dimensional space with ancilla-major index
//! `a * D + n` (ancilla tensor oscillator). The ancilla z-basis is
//! `{|g> = |0>, |e> = |1>}`.

use crate::error::{CoreError, Result};
use crate::{C64, CMatrix, CVector};

use super::state::OscillatorState;
use super::FockOperator;

/// Operator on ancilla (x) oscillator, stored dense as 2D x 2D.
#[derive(Debug, Clone)]
pub struct HybridOperator {
    osc_dim: usize,
    data: CMatrix,
}

/// Pauli axes for ancilla rotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RotationAxis {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
}

impl RotationAxis {
    pub const ALL: [RotationAxis; 4] =
        [RotationAxis::PlusX, RotationAxis::MinusX, RotationAxis::PlusY, RotationAxis::MinusY];

    /// 2x2 Pauli matrix along the (signed) axis.
    fn sigma(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        match self {
            RotationAxis::PlusX => [[o, one], [one, o]],
            RotationAxis::MinusX => [[o, -one], [-one, o]],
            RotationAxis::PlusY => [[o, -i], [i, o]],
            RotationAxis::MinusY => [[o, i], [-i, o]],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RotationAxis::PlusX => "+x",
            RotationAxis::MinusX => "-x",
            RotationAxis::PlusY => "+y",
            RotationAxis::MinusY => "-y",
        }
    }
}

impl HybridOperator {
    pub fn from_blocks(blocks: [[CMatrix; 2]; 2]) -> Result<Self> {
        let d = blocks[0][0].nrows();
        for row in &blocks {
            for b in row {
                if b.nrows() != d || b.ncols() != d {
                    return Err(CoreError::DimensionMismatch { expected: d, actual: b.nrows() });
                }
            }
        }
        let mut m = CMatrix::zeros(2 * d, 2 * d);
        for (a, row) in blocks.iter().enumerate() {
            for (b, blk) in row.iter().enumerate() {
                m.view_mut((a * d, b * d), (d, d)).copy_from(blk);
            }
        }
        Ok(Self { osc_dim: d, data: m })
    }

    /// Conditional displacement `exp[(c adag - c* a) x sigma_z / 2]`:
    /// block-diagonal with `D(c/2)` on `|g>` and `D(-c/2)` on `|e>`.
    pub fn conditional_displacement(c: C64, dim: usize) -> Result<Self> {
        let half = c / C64::new(2.0, 0.0);
        let dp = super::displacement(half, dim)?.into_data();
        let dm = super::displacement(-half, dim)?.into_data();
        let z = CMatrix::zeros(dim, dim);
        Self::from_blocks([[dp, z.clone()], [z, dm]])
    }

    /// Controlled displacement `|g><g| x I + |e><e| x D(c)`; equal to the
    /// symmetric conditional displacement up to the unconditional frame
    /// displacement `D(c/2)`.
    pub fn controlled_displacement(c: C64, dim: usize) -> Result<Self> {
        let d = super::displacement(c, dim)?.into_data();
        let id = CMatrix::identity(dim, dim);
        let z = CMatrix::zeros(dim, dim);
        Self::from_blocks([[id, z.clone()], [z, d]])
    }

    /// Ancilla rotation `exp(-i angle/2 sigma_axis) (x) I`.
    pub fn ancilla_rotation(axis: RotationAxis, angle: f64, dim: usize) -> Result<Self> {
        let s = axis.sigma();
        let c = C64::new((angle / 2.0).cos(), 0.0);
        let ms = C64::new(0.0, -(angle / 2.0).sin());
        let r = [[c + ms * s[0][0], ms * s[0][1]], [ms * s[1][0], c + ms * s[1][1]]];
        let id = CMatrix::identity(dim, dim);
        Self::from_blocks([
            [&id * r[0][0], &id * r[0][1]],
            [&id * r[1][0], &id * r[1][1]],
        ])
    }

    /// Oscillator operator lifted to the joint space, `I (x) op`.
    pub fn from_oscillator(op: &FockOperator) -> Result<Self> {
        let d = op.dim();
        let z = CMatrix::zeros(d, d);
        Self::from_blocks([[op.data().clone(), z.clone()], [z, op.data().clone()]])
    }

    pub fn osc_dim(&self) -> usize {
        self.osc_dim
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if rhs.osc_dim != self.osc_dim {
            return Err(CoreError::DimensionMismatch { expected: self.osc_dim, actual: rhs.osc_dim });
        }
        Ok(Self { osc_dim: self.osc_dim, data: &self.data * &rhs.data })
    }

    /// Oscillator-space block `<out| U |in>` for ancilla vectors `out`, `in`;
    /// this is the Kraus operator of preparing `in`, applying `U` and
    /// projecting the ancilla onto `out`.
    pub fn ancilla_sandwich(&self, out: [C64; 2], input: [C64; 2]) -> CMatrix {
        let d = self.osc_dim;
        let mut k = CMatrix::zeros(d, d);
        for a in 0..2 {
            for b in 0..2 {
                let w = out[a].conj() * input[b];
                if w != C64::new(0.0, 0.0) {
                    k += self.data.view((a * d, b * d), (d, d)) * w;
                }
            }
        }
        k
    }
}

/// Pure joint state of ancilla (x) oscillator.
#[derive(Debug, Clone)]
pub struct HybridState {
    osc_dim: usize,
    ket: CVector,
}

impl HybridState {
    /// Product state `qubit (x) oscillator` from a pure oscillator state.
    pub fn product(qubit: [C64; 2], osc: &OscillatorState) -> Result<Self> {
        let psi = osc.ket().ok_or_else(|| CoreError::InvalidParameter {
            name: "osc",
            reason: "hybrid product state needs a pure oscillator state".into(),
        })?;
        let d = psi.len();
        let mut ket = CVector::zeros(2 * d);
        for a in 0..2 {
            for n in 0..d {
                ket[a * d + n] = qubit[a] * psi[n];
            }
        }
        let mut s = Self { osc_dim: d, ket };
        s.renormalize();
        Ok(s)
    }

    fn renormalize(&mut self) {
        let n = self.ket.norm();
        if n > 0.0 {
            self.ket /= C64::new(n, 0.0);
        }
    }

    pub fn osc_dim(&self) -> usize {
        self.osc_dim
    }

    pub fn apply(&self, op: &HybridOperator) -> Result<Self> {
        if op.osc_dim != self.osc_dim {
            return Err(CoreError::DimensionMismatch { expected: self.osc_dim, actual: op.osc_dim });
        }
        Ok(Self { osc_dim: self.osc_dim, ket: &op.data * &self.ket })
    }

    /// Projective ancilla measurement in the basis `{b0, b1}`; returns
    /// `(probability, post-measurement oscillator state)` per outcome.
    /// Outcomes with negligible probability carry `None`.
    pub fn measure_ancilla(
        &self,
        basis: [[C64; 2]; 2],
    ) -> Vec<(f64, Option<OscillatorState>)> {
        let d = self.osc_dim;
        let mut out = Vec::with_capacity(2);
        for b in &basis {
            let mut branch = CVector::zeros(d);
            for n in 0..d {
                branch[n] = b[0].conj() * self.ket[n] + b[1].conj() * self.ket[d + n];
            }
            let p = branch.norm_squared();
            let state = if p > 1e-300 {
                Some(OscillatorState::from_ket(branch).expect("finite branch"))
            } else {
                None
            };
            out.push((p, state));
        }
        out
    }

    /// Reduced oscillator density matrix (ancilla traced out).
    pub fn partial_trace_ancilla(&self) -> OscillatorState {
        let d = self.osc_dim;
        let mut rho = CMatrix::zeros(d, d);
        for a in 0..2 {
            for m in 0..d {
                for n in 0..d {
                    rho[(m, n)] += self.ket[a * d + m] * self.ket[a * d + n].conj();
                }
            }
        }
        OscillatorState::from_density(rho).expect("partial trace is a valid state")
    }
}

/// Ancilla x-basis: `|+> = (|g>+|e>)/sqrt2`, `|-> = (|g>-|e>)/sqrt2`.
pub fn x_basis() -> [[C64; 2]; 2] {
    let h = C64::new(1.0 / 2f64.sqrt(), 0.0);
    [[h, h], [h, -h]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditional_displacement_blocks() {
        let dim = 16;
        let c = C64::new(0.4, -0.2);
        let cd = HybridOperator::conditional_displacement(c, dim).unwrap();
        let dp = super::super::displacement(c / C64::new(2.0, 0.0), dim).unwrap();
        // |g> branch gets D(c/2)
        let g = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let blk = cd.ancilla_sandwich(g, g);
        let diff = (&blk - dp.data()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
        // off-diagonal ancilla blocks vanish
        let e = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let off = cd.ancilla_sandwich(g, e);
        assert!(off.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-14);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let osc = OscillatorState::coherent(12, C64::new(0.7, 0.1)).unwrap();
        let h = C64::new(1.0 / 2f64.sqrt(), 0.0);
        let joint = HybridState::product([h, h], &osc).unwrap();
        let reduced = joint.partial_trace_ancilla();
        assert!(reduced.fidelity_to_pure(osc.ket().unwrap()).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn measurement_probabilities_sum_to_one() {
        let osc = OscillatorState::fock(8, 1).unwrap();
        let joint = HybridState::product([C64::new(1.0, 0.0), C64::new(0.0, 0.0)], &osc).unwrap();
        let rot = HybridOperator::ancilla_rotation(RotationAxis::PlusY, 1.1, 8).unwrap();
        let rotated = joint.apply(&rot).unwrap();
        let outcomes = rotated.measure_ancilla(x_basis());
        let total: f64 = outcomes.iter().map(|(p, _)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
