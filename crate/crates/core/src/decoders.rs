//! Logical read-out maps.
//!
//! Two decoders extract a 2x2 logical state from an oscillator state:
//!
//! - [`decode_perfect_ed`]: `rho_L = P rho P^dag / Tr(P rho P^dag)` with
//!   `P = |0><0_D| + |1><1_D|` built from the raw (non-orthogonal, so not
//!   quite projective) codewords. The trace is the post-selection success
//!   probability of a perfect error-detection protocol. The two candidate
//!   normalization readings coincide: `Tr(P rho P^dag) = Tr(rho P^dag P)`.
//! - [`decode_sbs`]: `rho_L = sum_e P_e rho P_e^dag` over an orthonormal
//!   subsystem basis `{|e, mu>}` ([`SbsBasis`]); exactly trace preserving.
//!
//! The basis anchors its `(0,0)` cell to the Loewdin-orthonormalized
//! codeword pair, fills the labeled cells with orthonormalized displaced
//! codewords, and completes the remaining space with cells whose logical
//! pairing is propagated through the logical `X` displacement.

use nalgebra::{Matrix2, Vector2};

use crate::error::{CoreError, Result};
use crate::fock::{displacement, OscillatorState};
use crate::gkp::{lattice_length, lowdin_pair, GkpCode};
use crate::{C64, CMatrix, CVector};

/// 2x2 logical density matrix.
#[derive(Debug, Clone)]
pub struct LogicalQubit {
    pub matrix: Matrix2<C64>,
}

impl LogicalQubit {
    pub fn trace(&self) -> f64 {
        (self.matrix[(0, 0)] + self.matrix[(1, 1)]).re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self.matrix - self.matrix.adjoint()).iter().map(|z: &C64| z.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue (2x2 closed form).
    pub fn min_eigenvalue(&self) -> f64 {
        let a = self.matrix[(0, 0)].re;
        let d = self.matrix[(1, 1)].re;
        let b = self.matrix[(0, 1)];
        let mid = (a + d) / 2.0;
        let rad = (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
        mid - rad
    }
}

/// Perfect-error-detection decoder; returns the normalized logical state and
/// the success probability `Tr(P rho P^dag)`.
pub fn decode_perfect_ed(
    rho: &OscillatorState,
    code: &GkpCode,
) -> Result<(LogicalQubit, f64)> {
    decode_with_bras(rho, &[code.codeword(0).clone(), code.codeword(1).clone()])
}

/// Perfect-ED decoder with the Loewdin-orthonormalized codeword pair, used
/// to compare against the subsystem decoder on code-space states.
pub fn decode_perfect_ed_lowdin(
    rho: &OscillatorState,
    code: &GkpCode,
) -> Result<(LogicalQubit, f64)> {
    let [a, b] = code.lowdin_codewords();
    decode_with_bras(rho, &[a, b])
}

fn decode_with_bras(rho: &OscillatorState, kets: &[CVector; 2]) -> Result<(LogicalQubit, f64)> {
    if kets[0].len() != rho.dim() {
        return Err(CoreError::DimensionMismatch { expected: kets[0].len(), actual: rho.dim() });
    }
    let dm = rho.density();
    let mut m = Matrix2::zeros();
    for mu in 0..2 {
        let rv = &dm * &kets[mu]; // rho |mu>
        for nu in 0..2 {
            // <mu| rho |nu> = conj(<nu| rho |mu>) for Hermitian rho
            m[(mu, nu)] = kets[nu].dotc(&rv).conj();
        }
    }
    let tr = (m[(0, 0)] + m[(1, 1)]).re;
    if tr < 1e-14 {
        return Err(CoreError::Undecodable(tr));
    }
    let normalized = m / C64::new(tr, 0.0);
    Ok((LogicalQubit { matrix: normalized }, tr))
}

/// Error-label grid for the subsystem basis: per-quadrature shift offsets in
/// quadrature units. Offsets must stay within a window narrower than `l/2`,
/// otherwise cells of opposite logical label coincide.
#[derive(Debug, Clone)]
pub struct ErrorGrid {
    pub offsets: Vec<f64>,
}

impl Default for ErrorGrid {
    fn default() -> Self {
        let l = lattice_length();
        Self { offsets: vec![0.0, -l / 8.0, l / 8.0, l / 4.0] }
    }
}

/// Cell label: a shift-grid cell or an orthogonal-completion cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorLabel {
    /// indices into the grid offsets for (q, p)
    Shift { q: i32, p: i32 },
    Completion(usize),
}

impl ErrorLabel {
    pub fn is_no_error(&self) -> bool {
        matches!(self, ErrorLabel::Shift { q: 0, p: 0 })
    }
}

#[derive(Debug, Clone)]
pub struct BasisCell {
    pub label: ErrorLabel,
    /// one or two orthonormal states; index = logical label
    pub states: Vec<CVector>,
}

/// Orthonormal subsystem basis `{|e, mu>}` spanning the truncated space.
#[derive(Debug, Clone)]
pub struct SbsBasis {
    pub dim: usize,
    pub cells: Vec<BasisCell>,
}

impl SbsBasis {
    /// The `(0,0)` cell states (closest to the codewords).
    pub fn code_cell(&self) -> &BasisCell {
        self.cells.iter().find(|c| c.label.is_no_error()).expect("(0,0) cell exists")
    }

    /// Normalized ket of a logical superposition `a |{(0,0),0}> + b |{(0,0),1}>`.
    pub fn code_cell_state(&self, a: C64, b: C64) -> Result<OscillatorState> {
        let cell = self.code_cell();
        OscillatorState::from_ket(&cell.states[0] * a + &cell.states[1] * b)
    }

    /// Max pairwise orthonormality defect over all basis states.
    pub fn orthonormality_defect(&self) -> f64 {
        let states: Vec<&CVector> = self.cells.iter().flat_map(|c| c.states.iter()).collect();
        let mut worst = 0.0f64;
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate().skip(i) {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dotc(b).norm() - want).abs());
            }
        }
        worst
    }

    /// Max entrywise `|I - sum |e,mu><e,mu||` over the interior block.
    pub fn completeness_defect(&self, margin: usize) -> f64 {
        let mut s = CMatrix::identity(self.dim, self.dim);
        for cell in &self.cells {
            for v in &cell.states {
                s -= v * v.adjoint();
            }
        }
        let k = self.dim.saturating_sub(margin);
        let mut worst = 0.0f64;
        for j in 0..k {
            for i in 0..k {
                worst = worst.max(s[(i, j)].norm());
            }
        }
        worst
    }

    pub fn n_states(&self) -> usize {
        self.cells.iter().map(|c| c.states.len()).sum()
    }
}

/// Builds the subsystem basis from displaced codewords.
pub fn build_sbs_basis(code: &GkpCode, grid: &ErrorGrid) -> Result<SbsBasis> {
    let dim = code.dim;
    let l = lattice_length();
    if grid.offsets.is_empty() || grid.offsets[0] != 0.0 {
        return Err(CoreError::BasisConstruction(
            "grid offsets must start with 0 (the no-error cell)".into(),
        ));
    }
    let width = grid.offsets.iter().cloned().fold(f64::MIN, f64::max)
        - grid.offsets.iter().cloned().fold(f64::MAX, f64::min);
    if width >= l / 2.0 {
        return Err(CoreError::BasisConstruction(format!(
            "offset window {width:.3} reaches l/2 = {:.3}; opposite-label cells collide",
            l / 2.0
        )));
    }
    if 2 * grid.offsets.len() * grid.offsets.len() > dim {
        return Err(CoreError::BasisConstruction(format!(
            "grid wants {} states but truncation holds {dim}",
            2 * grid.offsets.len() * grid.offsets.len()
        )));
    }

    // cells ordered by shift magnitude, (0,0) first
    let mut order: Vec<(i32, i32)> = Vec::new();
    for iq in 0..grid.offsets.len() as i32 {
        for ip in 0..grid.offsets.len() as i32 {
            order.push((iq, ip));
        }
    }
    order.sort_by(|a, b| {
        let ra = grid.offsets[a.0 as usize].powi(2) + grid.offsets[a.1 as usize].powi(2);
        let rb = grid.offsets[b.0 as usize].powi(2) + grid.offsets[b.1 as usize].powi(2);
        ra.partial_cmp(&rb).unwrap().then(a.cmp(b))
    });

    let mut fixed: Vec<CVector> = Vec::new();
    let mut cells: Vec<BasisCell> = Vec::new();
    for (iq, ip) in order {
        let uq = grid.offsets[iq as usize];
        let up = grid.offsets[ip as usize];
        // quadrature shift (uq, up) as displacement amplitude (uq + i up)/sqrt 2
        let alpha = C64::new(uq, up) / C64::new(2f64.sqrt(), 0.0);
        let (mut v0, mut v1) = if iq == 0 && ip == 0 {
            let [a, b] = code.lowdin_codewords();
            (a, b)
        } else {
            let d = displacement(alpha, dim)?;
            (d.apply(code.codeword(0))?, d.apply(code.codeword(1))?)
        };
        project_out(&mut v0, &fixed);
        project_out(&mut v1, &fixed);
        let n0 = v0.norm();
        let n1 = v1.norm();
        if n0 * n0 < 1e-8 || n1 * n1 < 1e-8 {
            return Err(CoreError::BasisConstruction(format!(
                "rank deficiency at cell ({iq},{ip}): residual norms {n0:.2e}, {n1:.2e}"
            )));
        }
        let [o0, o1] = lowdin_pair(
            &(&v0 / C64::new(n0, 0.0)),
            &(&v1 / C64::new(n1, 0.0)),
        );
        fixed.push(o0.clone());
        fixed.push(o1.clone());
        cells.push(BasisCell { label: ErrorLabel::Shift { q: iq, p: ip }, states: vec![o0, o1] });
    }

    // orthogonal completion, paired through the logical X displacement
    let completion = orthogonal_completion(&fixed, dim);
    let x_l = code.logical_x().clone();
    let mut remaining: Vec<CVector> = completion;
    let mut comp_idx = 0usize;
    while let Some(v) = remaining.first().cloned() {
        remaining.remove(0);
        // partner candidate: X_L v projected into the remaining span
        let xv = x_l.apply(&v)?;
        let mut partner_best: Option<(usize, f64)> = None;
        for (k, w) in remaining.iter().enumerate() {
            let ov = w.dotc(&xv).norm();
            if partner_best.map_or(true, |(_, b)| ov > b) {
                partner_best = Some((k, ov));
            }
        }
        let states = match partner_best {
            Some((k, ov)) if ov > 0.3 => {
                let w = remaining.remove(k);
                vec![v, w]
            }
            _ => vec![v],
        };
        cells.push(BasisCell { label: ErrorLabel::Completion(comp_idx), states });
        comp_idx += 1;
    }

    let basis = SbsBasis { dim, cells };
    let ortho = basis.orthonormality_defect();
    if ortho > 1e-10 {
        return Err(CoreError::BasisConstruction(format!(
            "orthonormality defect {ortho:.3e} after construction"
        )));
    }
    Ok(basis)
}

/// Twice-iterated Gram-Schmidt projection of `v` against `fixed`.
fn project_out(v: &mut CVector, fixed: &[CVector]) {
    for _ in 0..2 {
        for q in fixed {
            let c = q.dotc(&*v);
            *v -= q * c;
        }
    }
}

/// Orthonormal completion of `fixed` to the full space, deterministic
/// (modified Gram-Schmidt with largest-residual column pivoting on the
/// projected identity).
fn orthogonal_completion(fixed: &[CVector], dim: usize) -> Vec<CVector> {
    // residual candidates: columns of I, projected against `fixed`
    let mut cols: Vec<CVector> = (0..dim)
        .map(|n| {
            let mut e = CVector::zeros(dim);
            e[n] = C64::new(1.0, 0.0);
            project_out(&mut e, fixed);
            e
        })
        .collect();
    let want = dim - fixed.len();
    let mut out: Vec<CVector> = Vec::with_capacity(want);
    for _ in 0..want {
        let (k, norm) = cols
            .iter()
            .enumerate()
            .map(|(k, c)| (k, c.norm()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("candidates remain");
        if norm < 1e-8 {
            break;
        }
        let picked = cols.swap_remove(k) / C64::new(norm, 0.0);
        for c in cols.iter_mut() {
            let ov = picked.dotc(&*c);
            *c -= &picked * ov;
        }
        out.push(picked);
    }
    // a re-orthogonalization pass scrubs accumulated round-off
    let mut all: Vec<CVector> = fixed.to_vec();
    for v in out.iter_mut() {
        project_out(v, &all);
        let n = v.norm();
        *v /= C64::new(n, 0.0);
        all.push(v.clone());
    }
    out
}

/// Subsystem (Eq.-4 style) decoder: `rho_L = sum_e P_e rho P_e^dag`,
/// exactly trace preserving.
pub fn decode_sbs(rho: &OscillatorState, basis: &SbsBasis) -> Result<LogicalQubit> {
    if rho.dim() != basis.dim {
        return Err(CoreError::DimensionMismatch { expected: basis.dim, actual: rho.dim() });
    }
    let dm = rho.density();
    let mut m = Matrix2::zeros();
    for cell in &basis.cells {
        for (mu, vmu) in cell.states.iter().enumerate() {
            let rv = &dm * vmu;
            for (nu, vnu) in cell.states.iter().enumerate() {
                // <e,mu| rho |e,nu> contributes to m[mu, nu]
                m[(mu, nu)] += vnu.dotc(&rv).conj();
            }
        }
    }
    Ok(LogicalQubit { matrix: m })
}

/// `<psi_t| rho_L |psi_t>` for a pure qubit target.
pub fn logical_fidelity(rho_l: &LogicalQubit, target: &Vector2<C64>) -> f64 {
    let n = target.norm_squared();
    ((target.adjoint() * rho_l.matrix * target)[(0, 0)].re / n).max(0.0)
}
