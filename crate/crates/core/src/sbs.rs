//! Small-Big-small (sBs) error-correction round on ancilla (x) oscillator.
//!
//! One round is two half-rounds, first stabilizing `S_q` then `S_p`. Each
//! half-round prepares the ancilla in `|+>`, applies
//!
//! `CD(trim1) -> R(axis1, pi/2) -> big conditional displacement ->
//!  R(axis2, pi/2) -> CD(trim2)`
//!
//! and measures the ancilla; outcome `g` means no error was detected. The
//! big conditional displacement applies the full stabilizer displacement
//! (length `l = 2 sqrt(pi)` in quadrature units) to the `|e>` branch, which
//! makes the no-error Kraus operator `(I + S_Delta)/2`-like without a
//! residual logical frame. The small trims have relative displacement set by
//! `eps = l sinh(Delta^2)`, adapting the round to the finite-energy code.
//!
//! Rotation axes, trim signs/directions and the measurement basis form a
//! convention ([`SbsConvention`]); [`calibrate`] searches the per-rotation
//! axis choices {+-x, +-y} and sign patterns, and the shipped
//! [`SbsConvention::frozen`] is the calibrated winner. Kraus operators come
//! from projecting the ancilla branch per outcome, so `K_jk = K^(p)_k
//! K^(q)_j` holds by construction.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::fock::{HybridOperator, OscillatorState, RotationAxis};
use crate::gkp::{lattice_length, logical_state, GkpCode, LogicalLabel};
use crate::{C64, CMatrix};

/// Syndrome-to-click response scale of the exact round model: outcome `e`
/// fires with probability `min(m / SYNDROME_CLICK_SCALE, 1)` where `m` is
/// the squared finite-energy syndrome amplitude `||(A - I) psi||^2`. The
/// Ramsey interferometer corresponds to 4 (`|e^{i pi} - 1|^2`); the shipped
/// value is calibrated against the reported few-round fidelity gains (see
/// the decisions record): 2 reproduces the reported few-round gains.
pub const SYNDROME_CLICK_SCALE: f64 = 2.0;

/// Circuit phase convention of the round: everything the hardware-level
/// pulse sequence leaves free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SbsConvention {
    /// rotation axes in circuit order (first, second), shared by both halves
    pub axes: [RotationAxis; 2],
    /// trim signs in circuit order
    pub trim_signs: [f64; 2],
    /// trim directions: `true` = parallel to the big displacement axis,
    /// `false` = perpendicular (`i` times it)
    pub trim_parallel: [bool; 2],
    /// scale factor on the trim amplitude `eps/2`
    pub trim_scale: f64,
    /// measure the ancilla in the y basis instead of x (a fixed z rotation
    /// folded into the readout)
    pub measure_y: bool,
    /// negate both trim signs in the `S_p` half
    pub p_half_flip: bool,
}

impl SbsConvention {
    /// Calibrated convention (see the calibration test): controlled-
    /// stabilizer big displacement, first trim perpendicular, second trim
    /// parallel, rotations about -y then -x, y-basis readout.
    pub const fn frozen() -> Self {
        Self {
            axes: [RotationAxis::MinusY, RotationAxis::MinusX],
            trim_signs: [1.0, -1.0],
            trim_parallel: [false, true],
            trim_scale: 0.5,
            measure_y: true,
            p_half_flip: false,
        }
    }
}

/// How the round's Kraus operators are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RoundModel {
    /// Exact envelope-adapted syndrome measurement: the half-round Kraus
    /// pair is `sqrt((I +- C)/2)` with `C` the Hermitian part of the
    /// unitarized finite-energy stabilizer `E S E^{-1}`. The codewords are
    /// exact fixed points (no false-positive clicks), which is the idealized
    /// round the reported fidelity/success numbers assume.
    Exact,
    /// Five-element pulsed circuit (trim, rotation, big conditional
    /// displacement, rotation, trim) with the calibrated convention; carries
    /// the hardware-level Trotterization error of a real pulse sequence.
    PulsedCircuit,
}

/// Parameters of one sBs round.
#[derive(Debug, Clone)]
pub struct SbsParams {
    pub delta: f64,
    /// big (stabilizer) displacement length in quadrature units, `2 sqrt(pi)`
    pub big_length: f64,
    /// trim length in quadrature units, `eps = big_length * sinh(Delta^2)`
    /// (enters the pulsed circuit explicitly; the exact model realizes the
    /// same envelope adaptation through the stabilizer conjugation)
    pub trim: f64,
    pub model: RoundModel,
    pub convention: SbsConvention,
    /// measurement confusion `(p(e|g), p(g|e))`
    pub confusion: (f64, f64),
    /// optional ancilla phase-flip probability inserted around the big
    /// conditional displacement (biased-noise ancilla scenario; pulsed
    /// circuit only)
    pub ancilla_dephasing: Option<f64>,
}

impl SbsParams {
    /// Calibrated defaults for envelope `delta`.
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.6) {
            return Err(CoreError::InvalidParameter {
                name: "delta",
                reason: format!("envelope {delta} outside (0, 0.6]"),
            });
        }
        let l = lattice_length();
        Ok(Self {
            delta,
            big_length: l,
            trim: l * (delta * delta).sinh(),
            model: RoundModel::Exact,
            convention: SbsConvention::frozen(),
            confusion: (0.0, 0.0),
            ancilla_dephasing: None,
        })
    }

    pub fn with_model(mut self, model: RoundModel) -> Self {
        self.model = model;
        self
    }

    pub fn with_confusion(mut self, p_e_given_g: f64, p_g_given_e: f64) -> Result<Self> {
        for (name, p) in [("p(e|g)", p_e_given_g), ("p(g|e)", p_g_given_e)] {
            if !(0.0..1.0).contains(&p) {
                return Err(CoreError::InvalidParameter {
                    name: "confusion",
                    reason: format!("{name} = {p} outside [0, 1)"),
                });
            }
        }
        self.confusion = (p_e_given_g, p_g_given_e);
        Ok(self)
    }
}

/// Four-outcome Kraus channel of one round. Each outcome `(j, k)` carries a
/// list of weighted Kraus operators (one unless ancilla dephasing is on).
#[derive(Debug, Clone)]
pub struct SbsChannel {
    dim: usize,
    branches: [[Vec<CMatrix>; 2]; 2],
    confusion: (f64, f64),
}

/// Per-round log entry: outcome probabilities and retained weight.
#[derive(Debug, Clone, Serialize)]
pub struct SbsRecord {
    pub round: usize,
    pub outcome_model: &'static str,
    /// probabilities of the four true outcomes given the pre-round state
    pub p_gg: f64,
    pub p_ge: f64,
    pub p_eg: f64,
    pub p_ee: f64,
    pub weight_before: f64,
    pub weight_after: f64,
}

/// Output of [`apply_rounds`].
#[derive(Debug, Clone)]
pub struct RoundsOutcome {
    pub state: OscillatorState,
    pub success_prob: f64,
    pub records: Vec<SbsRecord>,
}

/// Measurement bras per outcome (g first).
fn outcome_bras(measure_y: bool) -> [[C64; 2]; 2] {
    let h = C64::new(1.0 / 2f64.sqrt(), 0.0);
    let i = C64::new(0.0, 1.0);
    if measure_y {
        [[h, i * h], [h, -i * h]]
    } else {
        [[h, h], [h, -h]]
    }
}

/// The five circuit elements of one half-round along `direction` (`i` for
/// the `S_q` half, `1` for the `S_p` half), in application order.
fn half_round_ops(
    params: &SbsParams,
    dim: usize,
    half: usize,
    direction: C64,
) -> Result<[HybridOperator; 5]> {
    let conv = &params.convention;
    let eps_alpha = params.trim / 2f64.sqrt();
    let big_alpha = params.big_length / 2f64.sqrt();
    let i = C64::new(0.0, 1.0);
    let flip = if half == 1 && conv.p_half_flip { -1.0 } else { 1.0 };
    let trim_amp = eps_alpha / 2.0 * conv.trim_scale;
    let trim_c = |k: usize| {
        let dir = if conv.trim_parallel[k] { C64::new(1.0, 0.0) } else { i };
        dir * direction * trim_amp * conv.trim_signs[k] * flip
    };
    Ok([
        HybridOperator::conditional_displacement(trim_c(0), dim)?,
        HybridOperator::ancilla_rotation(conv.axes[0], std::f64::consts::FRAC_PI_2, dim)?,
        HybridOperator::controlled_displacement(direction * big_alpha, dim)?,
        HybridOperator::ancilla_rotation(conv.axes[1], std::f64::consts::FRAC_PI_2, dim)?,
        HybridOperator::conditional_displacement(trim_c(1), dim)?,
    ])
}

/// Builds the Kraus pair of one half-round.
fn build_half(params: &SbsParams, dim: usize, half: usize, direction: C64) -> Result<[CMatrix; 2]> {
    let [cd1, r1, big, r2, cd2] = half_round_ops(params, dim, half, direction)?;
    let u = cd2.mul(&r2)?.mul(&big)?.mul(&r1)?.mul(&cd1)?;
    let h = C64::new(1.0 / 2f64.sqrt(), 0.0);
    let plus = [h, h];
    let bras = outcome_bras(params.convention.measure_y);
    Ok([u.ancilla_sandwich(bras[0], plus), u.ancilla_sandwich(bras[1], plus)])
}

/// Half-round Kraus branches including optional ancilla dephasing around the
/// big conditional displacement.
fn build_half_branches(
    params: &SbsParams,
    dim: usize,
    half: usize,
    direction: C64,
) -> Result<[Vec<CMatrix>; 2]> {
    let p = match params.ancilla_dephasing {
        None => {
            let [kg, ke] = build_half(params, dim, half, direction)?;
            return Ok([vec![kg], vec![ke]]);
        }
        Some(p) => {
            if !(0.0..1.0).contains(&p) {
                return Err(CoreError::InvalidParameter {
                    name: "ancilla_dephasing",
                    reason: format!("probability {p} outside [0, 1)"),
                });
            }
            p
        }
    };
    let [cd1, r1, big, r2, cd2] = half_round_ops(params, dim, half, direction)?;
    let zed = {
        let idm = CMatrix::identity(dim, dim);
        let z = CMatrix::zeros(dim, dim);
        HybridOperator::from_blocks([[idm.clone(), z.clone()], [z, -idm]])?
    };
    let h = C64::new(1.0 / 2f64.sqrt(), 0.0);
    let plus = [h, h];
    let bras = outcome_bras(params.convention.measure_y);
    let mut out: [Vec<CMatrix>; 2] = [Vec::new(), Vec::new()];
    for (z_before, z_after) in [(false, false), (true, false), (false, true), (true, true)] {
        let w = (if z_before { p } else { 1.0 - p }) * (if z_after { p } else { 1.0 - p });
        if w == 0.0 {
            continue;
        }
        let mut u = r1.mul(&cd1)?;
        if z_before {
            u = zed.mul(&u)?;
        }
        u = big.mul(&u)?;
        if z_after {
            u = zed.mul(&u)?;
        }
        u = cd2.mul(&r2.mul(&u)?)?;
        let sw = C64::new(w.sqrt(), 0.0);
        out[0].push(u.ancilla_sandwich(bras[0], plus) * sw);
        out[1].push(u.ancilla_sandwich(bras[1], plus) * sw);
    }
    Ok(out)
}

/// Exact-model half-round Kraus pair along `direction` (`i` for `S_q`,
/// `1` for `S_p`).
///
/// For a unitary stabilizer the Ramsey measurement has POVM elements
/// `E_e = (A - I)^dag (A - I)/4 = sin^2(Theta/2)`. The same expression with
/// the envelope-conjugated stabilizer `A = E S E^{-1}` (whose +1
/// eigenvectors are the finite-energy codewords) extends it to the
/// finite-energy syndrome; eigenvalues beyond the unitary range are clamped
/// to a certain click. In infinite dimension the codewords lie exactly in
/// the kernel of `(A - I)^dag (A - I)`; truncation breaks that at the few-
/// percent level (amplified by `E^{-1}`), so the orthonormalized codeword
/// pair is deflated out before clamping, restoring the exact fixed points.
/// `K_g = sqrt(I - E_e)` and `K_e = sqrt(E_e)` share an eigenbasis, so
/// completeness is exact.
fn build_half_exact(params: &SbsParams, dim: usize, direction: C64) -> Result<[CMatrix; 2]> {
    let big_alpha = params.big_length / 2f64.sqrt();
    let s = crate::fock::displacement(direction * big_alpha, dim)?;
    let d2 = params.delta * params.delta;
    // A = E S E^{-1}: diagonal scaling of the displacement matrix
    let mut a = s.into_data();
    for n in 0..dim {
        for m in 0..dim {
            a[(m, n)] *= (d2 * (n as f64 - m as f64)).exp();
        }
    }
    for n in 0..dim {
        a[(n, n)] -= C64::new(1.0, 0.0);
    }
    let mut m = a.adjoint() * &a; // (A - I)^dag (A - I)
    // deflate the truncation-induced code-space coupling
    let code = crate::gkp::build_code(params.delta, dim)?;
    let [c0, c1] = code.lowdin_codewords();
    for v in [&c0, &c1] {
        let mv = &m * v;
        let vm = v.adjoint() * &m;
        let vmv = (v.adjoint() * &mv)[(0, 0)];
        // M <- (I - vv^dag) M (I - vv^dag), expanded to avoid dense projectors
        m -= &mv * v.adjoint();
        m -= v * vm;
        m += v * (v.adjoint() * vmv);
    }
    let (vals, vecs) = crate::fock::hermitian_eigen(&m);
    let half = |kept: bool| -> CMatrix {
        let diag = crate::CVector::from_iterator(
            dim,
            vals.iter().map(|&x| {
                let e_click = (x.max(0.0) / SYNDROME_CLICK_SCALE).min(1.0);
                let w = if kept { 1.0 - e_click } else { e_click };
                C64::new(w.sqrt(), 0.0)
            }),
        );
        &vecs * CMatrix::from_diagonal(&diag) * vecs.adjoint()
    };
    Ok([half(true), half(false)])
}

/// Composes the full round channel (the `S_q` half then the `S_p` half).
pub fn build_sbs_round(params: &SbsParams, dim: usize) -> Result<SbsChannel> {
    if dim < 8 {
        return Err(CoreError::InvalidDimension { dim, reason: "sBs needs dim >= 8" });
    }
    if !(params.trim > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "trim",
            reason: "trim amplitude must be positive".into(),
        });
    }
    let (q_half, p_half) = match params.model {
        RoundModel::Exact => {
            let q = build_half_exact(params, dim, C64::new(0.0, 1.0))?;
            let p = build_half_exact(params, dim, C64::new(1.0, 0.0))?;
            let [qg, qe] = q;
            let [pg, pe] = p;
            ([vec![qg], vec![qe]], [vec![pg], vec![pe]])
        }
        RoundModel::PulsedCircuit => (
            build_half_branches(params, dim, 0, C64::new(0.0, 1.0))?,
            build_half_branches(params, dim, 1, C64::new(1.0, 0.0))?,
        ),
    };
    let mut branches: [[Vec<CMatrix>; 2]; 2] = Default::default();
    for j in 0..2 {
        for k in 0..2 {
            for kp in &p_half[k] {
                for kq in &q_half[j] {
                    branches[j][k].push(kp * kq);
                }
            }
        }
    }
    let channel = SbsChannel { dim, branches, confusion: params.confusion };
    let defect = channel.completeness_defect();
    if defect > 1e-8 {
        return Err(CoreError::CalibrationFailed {
            tried: format!(
                "convention {:?}: Kraus completeness defect {defect:.3e}",
                params.convention
            ),
        });
    }
    Ok(channel)
}

impl SbsChannel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn confusion(&self) -> (f64, f64) {
        self.confusion
    }

    /// Kraus operators of true outcome `(j, k)`; `0 = g`, `1 = e`.
    pub fn kraus(&self, j: usize, k: usize) -> &[CMatrix] {
        &self.branches[j][k]
    }

    /// Relabels outcomes with measurement confusion probabilities.
    pub fn with_confusion(mut self, p_e_given_g: f64, p_g_given_e: f64) -> Result<Self> {
        for p in [p_e_given_g, p_g_given_e] {
            if !(0.0..1.0).contains(&p) {
                return Err(CoreError::InvalidParameter {
                    name: "confusion",
                    reason: format!("probability {p} outside [0, 1)"),
                });
            }
        }
        self.confusion = (p_e_given_g, p_g_given_e);
        Ok(self)
    }

    /// `max |sum K^dag K - I|` over all entries.
    pub fn completeness_defect(&self) -> f64 {
        let mut s = CMatrix::zeros(self.dim, self.dim);
        for j in 0..2 {
            for k in 0..2 {
                for kr in &self.branches[j][k] {
                    s += kr.adjoint() * kr;
                }
            }
        }
        let id = CMatrix::identity(self.dim, self.dim);
        (s - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn apply_branch(&self, rho: &CMatrix, j: usize, k: usize) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for kr in &self.branches[j][k] {
            out += kr * rho * kr.adjoint();
        }
        out
    }

    /// Full CPTP map (all outcomes summed); confusion does not matter here.
    pub fn apply_full(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for j in 0..2 {
            for k in 0..2 {
                out += self.apply_branch(rho, j, k);
            }
        }
        out
    }

    /// CP map of reporting `(g, g)`: true outcomes weighted by the confusion
    /// model, `P(report g | true g) = 1 - p(e|g)`, `P(report g | true e) =
    /// p(g|e)`.
    pub fn apply_reported_gg(&self, rho: &CMatrix) -> CMatrix {
        let (p_eg, p_ge) = self.confusion;
        let pg = [1.0 - p_eg, p_ge]; // indexed by the true outcome
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for j in 0..2 {
            for k in 0..2 {
                let w = pg[j] * pg[k];
                if w > 0.0 {
                    out += self.apply_branch(rho, j, k) * C64::new(w, 0.0);
                }
            }
        }
        out
    }

    /// Probabilities of the four true outcomes for a normalized state.
    pub fn outcome_probs(&self, rho: &CMatrix) -> [[f64; 2]; 2] {
        let mut p = [[0.0; 2]; 2];
        for j in 0..2 {
            for k in 0..2 {
                let b = self.apply_branch(rho, j, k);
                p[j][k] = (0..self.dim).map(|i| b[(i, i)].re).sum();
            }
        }
        p
    }
}

/// Applies `n_rounds` of the channel. With `postselect` the reported-(g,g)
/// branch is kept (success probability = retained trace); otherwise the full
/// CPTP sum is applied each round (cost linear in the round count).
pub fn apply_rounds(
    rho: &OscillatorState,
    channel: &SbsChannel,
    n_rounds: usize,
    postselect: bool,
) -> Result<RoundsOutcome> {
    if rho.dim() != channel.dim {
        return Err(CoreError::DimensionMismatch { expected: channel.dim, actual: rho.dim() });
    }
    let mut state = rho.normalized()?.density();
    let mut records = Vec::with_capacity(n_rounds);
    let model = if postselect { "postselected-gg" } else { "full-sum" };
    for round in 0..n_rounds {
        let before: f64 = (0..channel.dim).map(|i| state[(i, i)].re).sum();
        let probs = channel.outcome_probs(&state);
        state = if postselect {
            channel.apply_reported_gg(&state)
        } else {
            channel.apply_full(&state)
        };
        let after: f64 = (0..channel.dim).map(|i| state[(i, i)].re).sum();
        records.push(SbsRecord {
            round,
            outcome_model: model,
            p_gg: probs[0][0],
            p_ge: probs[0][1],
            p_eg: probs[1][0],
            p_ee: probs[1][1],
            weight_before: before,
            weight_after: after,
        });
        if postselect && after < 1e-12 {
            return Err(CoreError::PostSelectionStarved { success: after });
        }
    }
    let success = (0..channel.dim).map(|i| state[(i, i)].re).sum::<f64>();
    let normalized = OscillatorState::from_density_weighted(state, success)?.normalized()?;
    Ok(RoundsOutcome { state: normalized, success_prob: success, records })
}

/// Result of [`steady_state_rounds`].
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub state: OscillatorState,
    pub rounds_used: usize,
    pub converged: bool,
    pub last_distance: f64,
    /// per-round retained weight of the post-selected map
    pub round_weights: Vec<f64>,
}

/// Iterates post-selected rounds until the trace distance between successive
/// normalized states drops below `tol`. Hitting `max_rounds` is reported,
/// not fatal.
pub fn steady_state_rounds(
    rho: &OscillatorState,
    channel: &SbsChannel,
    tol: f64,
    max_rounds: usize,
) -> Result<SteadyState> {
    if !(tol > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "tol",
            reason: "tolerance must be positive".into(),
        });
    }
    let mut current = rho.normalized()?;
    let mut distance = f64::INFINITY;
    let mut weights = Vec::new();
    for round in 1..=max_rounds {
        let next_raw = channel.apply_reported_gg(&current.density());
        let weight: f64 = (0..channel.dim).map(|i| next_raw[(i, i)].re).sum();
        if weight < 1e-12 {
            return Err(CoreError::PostSelectionStarved { success: weight });
        }
        weights.push(weight);
        let next = OscillatorState::from_density(next_raw)?.normalized()?;
        distance = next.trace_distance(&current)?;
        current = next;
        if distance < tol {
            return Ok(SteadyState {
                state: current,
                rounds_used: round,
                converged: true,
                last_distance: distance,
                round_weights: weights,
            });
        }
    }
    Ok(SteadyState {
        state: current,
        rounds_used: max_rounds,
        converged: false,
        last_distance: distance,
        round_weights: weights,
    })
}

/// Calibration metrics of one convention.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub convention: SbsConvention,
    pub retention: f64,
    pub mean_fidelity: f64,
}

/// Fidelity and minimum retention of the reported-gg Kraus operator over the
/// codewords and `|+Y>`.
fn score_channel(channel: &SbsChannel, states: &[OscillatorState]) -> (f64, f64) {
    let kgg = &channel.branches[0][0][0];
    let mut fid_sum = 0.0;
    let mut ret_min = f64::INFINITY;
    for st in states {
        let v = st.ket().expect("pure test state");
        let kv = kgg * v;
        let ret = kv.norm_squared();
        let fid = if ret > 0.0 { v.dotc(&kv).norm_sqr() / ret } else { 0.0 };
        fid_sum += fid;
        ret_min = ret_min.min(ret);
    }
    (fid_sum / states.len() as f64, ret_min)
}

/// Searches the rotation-axis choices {+-x, +-y}, trim signs and the
/// measurement basis for the convention maximizing the renormalized `K_gg`
/// codeword fidelity. Fails listing the tried conventions when nothing
/// stabilizes (fidelity >= 0.99 and retention >= 0.95 on the test states).
pub fn calibrate(code: &GkpCode) -> Result<(SbsParams, CalibrationReport)> {
    let dim = code.dim;
    let test_states = [
        logical_state(code, LogicalLabel::Zero)?,
        logical_state(code, LogicalLabel::One)?,
        logical_state(code, LogicalLabel::PlusY)?,
    ];
    let frozen = SbsConvention::frozen();
    let mut best: Option<(f64, f64, SbsConvention)> = None;
    let mut tried = Vec::new();
    for a1 in RotationAxis::ALL {
        for a2 in RotationAxis::ALL {
            for s1 in [1.0f64, -1.0] {
                for s2 in [1.0f64, -1.0] {
                    for measure_y in [false, true] {
                        let convention = SbsConvention {
                            axes: [a1, a2],
                            trim_signs: [s1, s2],
                            measure_y,
                            ..frozen
                        };
                        let mut params = SbsParams::new(code.delta)?.with_model(RoundModel::PulsedCircuit);
                        params.convention = convention;
                        let channel = build_sbs_round(&params, dim)?;
                        let (fid, ret) = score_channel(&channel, &test_states);
                        tried.push(format!(
                            "[{} {} | {:+.0} {:+.0} | meas {}]: F={fid:.4} R={ret:.4}",
                            a1.label(),
                            a2.label(),
                            s1,
                            s2,
                            if measure_y { "y" } else { "x" },
                        ));
                        if best.as_ref().map_or(true, |(bf, br, _)| {
                            fid > *bf + 1e-12 || ((fid - *bf).abs() <= 1e-12 && ret > *br)
                        }) {
                            best = Some((fid, ret, convention));
                        }
                    }
                }
            }
        }
    }
    let (fid, ret, convention) = best.expect("nonempty search space");
    if fid < 0.99 || ret < 0.95 {
        return Err(CoreError::CalibrationFailed { tried: tried.join("; ") });
    }
    let mut params = SbsParams::new(code.delta)?.with_model(RoundModel::PulsedCircuit);
    params.convention = convention;
    let report = CalibrationReport { convention, retention: ret, mean_fidelity: fid };
    Ok((params, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ladder_ops;
    use crate::gkp::build_code;

    fn channel_at(delta: f64, dim: usize) -> (GkpCode, SbsChannel) {
        let code = build_code(delta, dim).unwrap();
        let params = SbsParams::new(delta).unwrap();
        let channel = build_sbs_round(&params, dim).unwrap();
        (code, channel)
    }

    #[test]
    fn kraus_completeness() {
        for (delta, dim) in [(0.36, 60), (0.25, 100)] {
            let (_, channel) = channel_at(delta, dim);
            assert!(
                channel.completeness_defect() <= 1e-8,
                "completeness defect {} at delta {delta}",
                channel.completeness_defect()
            );
        }
    }

    #[test]
    fn two_measurement_structure() {
        // K_jk equals the product of half-round Kraus operators
        let dim = 60;
        for model in [RoundModel::Exact, RoundModel::PulsedCircuit] {
            let params = SbsParams::new(0.36).unwrap().with_model(model);
            let (q, p) = match model {
                RoundModel::Exact => (
                    build_half_exact(&params, dim, C64::new(0.0, 1.0)).unwrap(),
                    build_half_exact(&params, dim, C64::new(1.0, 0.0)).unwrap(),
                ),
                RoundModel::PulsedCircuit => (
                    build_half(&params, dim, 0, C64::new(0.0, 1.0)).unwrap(),
                    build_half(&params, dim, 1, C64::new(1.0, 0.0)).unwrap(),
                ),
            };
            let channel = build_sbs_round(&params, dim).unwrap();
            for j in 0..2 {
                for k in 0..2 {
                    let want = &p[k] * &q[j];
                    let got = &channel.branches[j][k][0];
                    let d = (got - want).iter().map(|z| z.norm()).fold(0.0, f64::max);
                    assert!(d < 1e-12);
                }
            }
        }
    }

    #[test]
    fn fixed_point_preservation() {
        let (code, channel) = channel_at(0.36, 60);
        let zero = code.codeword(0);
        let kgg = &channel.branches[0][0][0];
        let kv = kgg * zero;
        let retention = kv.norm_squared();
        let fidelity = zero.dotc(&kv).norm_sqr() / retention;
        assert!(retention >= 0.95, "retention {retention}");
        assert!(fidelity >= 0.99, "fidelity {fidelity}");
    }

    #[test]
    fn error_flagging_after_photon_loss() {
        let (code, channel) = channel_at(0.36, 60);
        let (a, _, _) = ladder_ops(60).unwrap();
        let clean = OscillatorState::from_ket(code.codeword(0).clone()).unwrap();
        let lossy = OscillatorState::from_ket(a.apply(code.codeword(0)).unwrap()).unwrap();
        let p_clean = channel.outcome_probs(&clean.density());
        let p_lossy = channel.outcome_probs(&lossy.density());
        let e_clean = 1.0 - p_clean[0][0];
        let e_lossy = 1.0 - p_lossy[0][0];
        assert!(
            e_lossy > 5.0 * e_clean,
            "error flag probabilities: lossy {e_lossy}, clean {e_clean}"
        );
    }

    #[test]
    fn zero_rounds_is_identity() {
        let (code, channel) = channel_at(0.36, 60);
        let st = logical_state(&code, LogicalLabel::PlusY).unwrap();
        let out = apply_rounds(&st, &channel, 0, true).unwrap();
        assert_eq!(out.success_prob, 1.0);
        assert!(out.records.is_empty());
        assert!(out.state.fidelity_to_pure(st.ket().unwrap()).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn full_sum_preserves_trace() {
        let (code, channel) = channel_at(0.36, 60);
        let st = logical_state(&code, LogicalLabel::Plus).unwrap();
        for n in [1usize, 3] {
            let out = apply_rounds(&st, &channel, n, false).unwrap();
            assert!(
                (out.success_prob - 1.0).abs() <= 1e-8,
                "trace after {n} full rounds: {}",
                out.success_prob
            );
        }
    }

    #[test]
    fn confusion_limiting_cases() {
        let (code, channel) = channel_at(0.36, 60);
        let st = logical_state(&code, LogicalLabel::Zero).unwrap();
        // (0, 0): unchanged channel
        let c0 = channel.clone().with_confusion(0.0, 0.0).unwrap();
        let base = apply_rounds(&st, &channel, 2, true).unwrap();
        let same = apply_rounds(&st, &c0, 2, true).unwrap();
        assert!((base.success_prob - same.success_prob).abs() < 1e-14);
        // p(g|e) = 1, p(e|g) = 0: everything reported g, success = 1
        let call = channel.clone().with_confusion(0.0, 1.0 - 1e-15).unwrap();
        let out = apply_rounds(&st, &call, 2, true).unwrap();
        assert!((out.success_prob - 1.0).abs() < 1e-8, "success {}", out.success_prob);
    }

    #[test]
    fn false_positive_rate_scales_binomially() {
        // p(e|g) = 1e-3 cuts success by about (1 - 1e-3)^{2N} on a clean state
        let (code, channel) = channel_at(0.36, 60);
        let st = logical_state(&code, LogicalLabel::Zero).unwrap();
        let n = 5usize;
        let clean = apply_rounds(&st, &channel, n, true).unwrap();
        let noisy_channel = channel.clone().with_confusion(1e-3, 0.0).unwrap();
        let noisy = apply_rounds(&st, &noisy_channel, n, true).unwrap();
        let ratio = noisy.success_prob / clean.success_prob;
        let want = (1.0f64 - 1e-3).powi(2 * n as i32);
        assert!(
            (ratio - want).abs() < 5e-4,
            "confusion success ratio {ratio}, binomial estimate {want}"
        );
    }

    #[test]
    fn steady_state_terminates_quickly_when_already_steady() {
        let (code, channel) = channel_at(0.36, 60);
        let st = logical_state(&code, LogicalLabel::Zero).unwrap();
        // pump into the channel fixed point first; successive distances
        // bottom out near 2.5e-6 (a slowly rotating coherence among the
        // near-degenerate top modes of K_gg), so the tolerance sits above it
        let pumped = apply_rounds(&st, &channel, 24, true).unwrap().state;
        let ss = steady_state_rounds(&pumped, &channel, 1e-5, 50).unwrap();
        assert!(ss.converged);
        assert!(ss.rounds_used <= 2, "rounds used {}", ss.rounds_used);
    }

    #[test]
    fn calibration_confirms_frozen_convention() {
        let code = build_code(0.36, 60).unwrap();
        let (params, report) = calibrate(&code).unwrap();
        assert!(report.mean_fidelity >= 0.99);
        assert!(report.retention >= 0.95);
        // the frozen convention must perform at the calibrated winner's level
        let frozen = SbsParams::new(0.36).unwrap();
        let chan_frozen = build_sbs_round(&frozen, 60).unwrap();
        let chan_best = build_sbs_round(&params, 60).unwrap();
        let test_states = [
            logical_state(&code, LogicalLabel::Zero).unwrap(),
            logical_state(&code, LogicalLabel::One).unwrap(),
            logical_state(&code, LogicalLabel::PlusY).unwrap(),
        ];
        let (f_frozen, r_frozen) = score_channel(&chan_frozen, &test_states);
        let (f_best, _) = score_channel(&chan_best, &test_states);
        assert!(f_frozen >= 0.99 && r_frozen >= 0.95, "frozen: F={f_frozen} R={r_frozen}");
        assert!(f_frozen >= f_best - 1e-6, "frozen {f_frozen} vs best {f_best}");
    }

    #[test]
    #[ignore = "one-off full convention search; run with --nocapture"]
    fn search_conventions_full() {
        use crate::fock::ladder_ops;
        let dim = 60;
        let code = build_code(0.36, dim).unwrap();
        let test_states = [
            logical_state(&code, LogicalLabel::Zero).unwrap(),
            logical_state(&code, LogicalLabel::One).unwrap(),
            logical_state(&code, LogicalLabel::PlusY).unwrap(),
        ];
        let (a, _, _) = ladder_ops(dim).unwrap();
        let lossy = OscillatorState::from_ket(a.apply(code.codeword(0)).unwrap()).unwrap();
        let l_alpha = lattice_length() / 2f64.sqrt();
        let eps_alpha = lattice_length() * (0.36f64 * 0.36).sinh() / 2f64.sqrt();
        let i = C64::new(0.0, 1.0);
        let h = C64::new(1.0 / 2f64.sqrt(), 0.0);

        #[derive(Clone, Copy)]
        struct Knobs {
            a1: RotationAxis,
            a2: RotationAxis,
            s1: f64,
            s2: f64,
            t1p: bool,
            t2p: bool,
            big_sign: f64,
            prep_y: bool,
            meas_y: bool,
        }
        let mut knobs = Vec::new();
        for a1 in RotationAxis::ALL {
            for a2 in RotationAxis::ALL {
                for s1 in [1.0f64, -1.0] {
                    for s2 in [1.0f64, -1.0] {
                        for t1p in [false, true] {
                            for t2p in [false, true] {
                                for big_sign in [1.0f64, -1.0] {
                                    for prep_y in [false, true] {
                                        for meas_y in [false, true] {
                                            knobs.push(Knobs {
                                                a1, a2, s1, s2, t1p, t2p,
                                                big_sign, prep_y, meas_y,
                                            });
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        let build_k = |kb: &Knobs, direction: C64| -> [CMatrix; 2] {
            let amp = eps_alpha / 2.0;
            let tdir = |par: bool| if par { C64::new(1.0, 0.0) } else { i };
            let cd1 = HybridOperator::conditional_displacement(
                tdir(kb.t1p) * direction * amp * kb.s1,
                dim,
            )
            .unwrap();
            let r1 =
                HybridOperator::ancilla_rotation(kb.a1, std::f64::consts::FRAC_PI_2, dim).unwrap();
            let big = HybridOperator::controlled_displacement(
                direction * l_alpha * kb.big_sign,
                dim,
            )
            .unwrap();
            let r2 =
                HybridOperator::ancilla_rotation(kb.a2, std::f64::consts::FRAC_PI_2, dim).unwrap();
            let cd2 = HybridOperator::conditional_displacement(
                tdir(kb.t2p) * direction * amp * kb.s2,
                dim,
            )
            .unwrap();
            let u = cd2.mul(&r2).unwrap().mul(&big).unwrap().mul(&r1).unwrap().mul(&cd1).unwrap();
            let prep = if kb.prep_y { [h, i * h] } else { [h, h] };
            let bras = outcome_bras(kb.meas_y);
            [u.ancilla_sandwich(bras[0], prep), u.ancilla_sandwich(bras[1], prep)]
        };
        let mut rows: Vec<(f64, String)> = crate::par::map_collect(knobs.len(), |k| {
            let kb = &knobs[k];
            let q = build_k(kb, i);
            let p = build_k(kb, C64::new(1.0, 0.0));
            let kgg = &p[0] * &q[0];
            let mut fsum = 0.0;
            let mut rmin = f64::INFINITY;
            for st in &test_states {
                let v = st.ket().unwrap();
                let kv = &kgg * v;
                let r = kv.norm_squared();
                let f = if r > 0.0 { v.dotc(&kv).norm_sqr() / r } else { 0.0 };
                fsum += f;
                rmin = rmin.min(r);
            }
            let f = fsum / 3.0;
            // e-probability over both halves
            let e_of = |st: &OscillatorState| {
                let v = st.ket().unwrap();
                let kqg = &q[0] * v;
                let gg = (&p[0] * &kqg).norm_squared();
                1.0 - gg
            };
            let e_clean = e_of(&test_states[0]);
            let e_loss = e_of(&lossy);
            let score = if f > 0.985 && rmin > 0.9 { e_clean } else { 1.0 };
            (
                score,
                format!(
                    "axes {} {} signs {:+.0} {:+.0} par ({},{}) big {:+.0} prep_y {} meas_y {}: F={f:.5} Rmin={rmin:.5} e_clean={e_clean:.5} e_loss={e_loss:.4} contrast={:.1}",
                    kb.a1.label(), kb.a2.label(), kb.s1, kb.s2,
                    kb.t1p, kb.t2p, kb.big_sign, kb.prep_y, kb.meas_y,
                    e_loss / e_clean.max(1e-12),
                ),
            )
        });
        rows.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        for (_, desc) in rows.iter().take(24) {
            println!("{desc}");
        }
    }

    #[test]
    #[ignore = "one-off fine scan of the trim magnitude; run with --nocapture"]
    fn refine_trim_scale() {
        let code = build_code(0.36, 60).unwrap();
        let test_states = [
            logical_state(&code, LogicalLabel::Zero).unwrap(),
            logical_state(&code, LogicalLabel::One).unwrap(),
            logical_state(&code, LogicalLabel::PlusY).unwrap(),
        ];
        let (a, _, _) = ladder_ops(60).unwrap();
        let lossy =
            OscillatorState::from_ket(a.apply(code.codeword(0)).unwrap()).unwrap();
        for scale in [0.3, 0.4, 0.5, 0.6, 0.7, 0.85, 1.0] {
            let mut params = SbsParams::new(0.36).unwrap();
            params.convention.trim_scale = scale;
            let channel = build_sbs_round(&params, 60).unwrap();
            let (f, r) = score_channel(&channel, &test_states);
            let clean = channel.outcome_probs(&test_states[0].density());
            let bad = channel.outcome_probs(&lossy.density());
            // two pumped rounds to probe the steady-state retention
            let pumped = apply_rounds(&test_states[0], &channel, 6, true).unwrap();
            let ss_ret = pumped.records.last().unwrap().weight_after
                / pumped.records.last().unwrap().weight_before;
            println!(
                "scale {scale}: F={f:.5} Rmin={r:.5} e_clean={:.5} e_loss={:.5} ss_ret={ss_ret:.5}",
                1.0 - clean[0][0],
                1.0 - bad[0][0]
            );
        }
    }

    #[test]
    fn ancilla_dephasing_toggle_builds_complete_channel() {
        // ancilla noise is a circuit-level effect
        let mut params = SbsParams::new(0.36).unwrap().with_model(RoundModel::PulsedCircuit);
        params.ancilla_dephasing = Some(0.01);
        let channel = build_sbs_round(&params, 60).unwrap();
        assert!(channel.completeness_defect() <= 1e-8);
        assert!(channel.branches[0][0].len() > 1);
    }
}
