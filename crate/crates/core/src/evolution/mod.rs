//! Open-system evolution: Lindblad master equation with photon loss and
//! optional dephasing, plus an independent quantum-jump oracle.
//!
//! The master equation integrated is
//! `drho/dt = -i[H, rho] + kappa D[a] rho + kappa_phi D[n] rho` with
//! `D[L] rho = L rho L^dag - {L^dag L, rho}/2`. The right-hand side is
//! applied through matrix products and index shifts; no `D^2 x D^2`
//! superoperator is ever materialized. Diagonal Hamiltonians (the Kerr gate,
//! free decay) use an elementwise fast path.

mod trajectory;

pub use trajectory::{trajectory_oracle, trajectory_oracle_with, TrajectoryResult, TrajectoryStats};

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::fock::{min_eigenvalue, FockOperator, OscillatorState};
use crate::{C64, CMatrix};

/// Loss / dephasing rates over a fixed evolution window.
///
/// `gamma = 1 - exp(-kappa * duration)` is derived, never stored
/// independently, so the invariant holds to machine precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSpec {
    pub kappa: f64,
    pub kappa_phi: f64,
    pub duration: f64,
}

impl NoiseSpec {
    pub fn new(kappa: f64, kappa_phi: f64, duration: f64) -> Result<Self> {
        for (name, v) in [("kappa", kappa), ("kappa_phi", kappa_phi), ("duration", duration)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(CoreError::InvalidParameter {
                    name,
                    reason: format!("must be finite and non-negative, got {v}"),
                });
            }
        }
        Ok(Self { kappa, kappa_phi, duration })
    }

    /// Loss-only spec with per-gate loss parameter `gamma` over `duration`.
    pub fn from_gamma(gamma: f64, duration: f64) -> Result<Self> {
        let kappa = gamma_to_kappa(gamma, duration)?;
        Self::new(kappa, 0.0, duration)
    }

    pub fn with_dephasing(mut self, kappa_phi: f64) -> Result<Self> {
        if !(kappa_phi >= 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "kappa_phi",
                reason: "must be non-negative".into(),
            });
        }
        self.kappa_phi = kappa_phi;
        Ok(self)
    }

    /// Per-photon loss probability over the window.
    pub fn gamma(&self) -> f64 {
        1.0 - (-self.kappa * self.duration).exp()
    }
}

/// Inverts `gamma = 1 - exp(-kappa t)`: `kappa = -ln(1 - gamma)/duration`.
pub fn gamma_to_kappa(gamma: f64, duration: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(CoreError::InvalidParameter {
            name: "gamma",
            reason: format!("loss parameter {gamma} outside [0, 1)"),
        });
    }
    if !(duration > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "duration",
            reason: "must be positive".into(),
        });
    }
    Ok(-(1.0 - gamma).ln() / duration)
}

/// Integrator diagnostics carried alongside every evolved state.
#[derive(Debug, Clone, Serialize)]
pub struct EvolutionDiagnostics {
    pub steps: usize,
    pub step_size: f64,
    pub trace_drift: f64,
    pub negativity: f64,
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub state: OscillatorState,
    pub diagnostics: EvolutionDiagnostics,
}

/// Fixed RK4 step from the conservative spectral bound
/// `h = min(T/2000, 0.05 / (2 ||H||_inf + kappa D + kappa_phi D^2))`.
pub fn rk4_step_size(hamiltonian: &FockOperator, noise: &NoiseSpec) -> f64 {
    let d = hamiltonian.dim() as f64;
    let mut inf_norm = 0.0f64;
    for i in 0..hamiltonian.dim() {
        let mut row = 0.0;
        for j in 0..hamiltonian.dim() {
            row += hamiltonian.data()[(i, j)].norm();
        }
        inf_norm = inf_norm.max(row);
    }
    let spectral = 2.0 * inf_norm + noise.kappa * d + noise.kappa_phi * d * d;
    let h_spectral = if spectral > 0.0 { 0.05 / spectral } else { f64::INFINITY };
    (noise.duration / 2000.0).min(h_spectral)
}

/// Integrates the master equation over `noise.duration` with fixed-step RK4.
///
/// Fails (carrying diagnostics) when the trace drifts by more than 1e-8 or
/// the final state shows negativity below -1e-7.
pub fn lindblad_evolve(
    rho0: &OscillatorState,
    hamiltonian: &FockOperator,
    noise: &NoiseSpec,
) -> Result<EvolutionResult> {
    lindblad_evolve_with_step(rho0, hamiltonian, noise, None)
}

/// Same as [`lindblad_evolve`] with an explicit step override, used by the
/// step-halving convergence checks.
pub fn lindblad_evolve_with_step(
    rho0: &OscillatorState,
    hamiltonian: &FockOperator,
    noise: &NoiseSpec,
    step_override: Option<f64>,
) -> Result<EvolutionResult> {
    let dim = hamiltonian.dim();
    if rho0.dim() != dim {
        return Err(CoreError::DimensionMismatch { expected: dim, actual: rho0.dim() });
    }
    if hamiltonian.hermiticity_defect() > 1e-10 {
        return Err(CoreError::InvalidParameter {
            name: "hamiltonian",
            reason: "must be Hermitian".into(),
        });
    }
    let mut rho = rho0.density();
    if noise.duration == 0.0 {
        return Ok(EvolutionResult {
            state: OscillatorState::from_density_weighted(rho, rho0.weight())?,
            diagnostics: EvolutionDiagnostics {
                steps: 0,
                step_size: 0.0,
                trace_drift: 0.0,
                negativity: 0.0,
            },
        });
    }

    let h_raw = step_override.unwrap_or_else(|| rk4_step_size(hamiltonian, noise));
    let n_steps = (noise.duration / h_raw).ceil().max(1.0) as usize;
    let h = noise.duration / n_steps as f64;

    let rhs = RhsContext::new(hamiltonian, noise);
    let trace0 = trace_re(&rho);
    let mut max_drift = 0.0f64;

    let mut k1 = CMatrix::zeros(dim, dim);
    let mut k2 = CMatrix::zeros(dim, dim);
    let mut k3 = CMatrix::zeros(dim, dim);
    let mut k4 = CMatrix::zeros(dim, dim);
    let mut stage = CMatrix::zeros(dim, dim);

    for step in 0..n_steps {
        rhs.eval(&rho, &mut k1);
        axpy_into(&mut stage, &rho, &k1, 0.5 * h);
        rhs.eval(&stage, &mut k2);
        axpy_into(&mut stage, &rho, &k2, 0.5 * h);
        rhs.eval(&stage, &mut k3);
        axpy_into(&mut stage, &rho, &k3, h);
        rhs.eval(&stage, &mut k4);
        {
            let r = rho.as_mut_slice();
            let (a, b, c, d4) =
                (k1.as_slice(), k2.as_slice(), k3.as_slice(), k4.as_slice());
            let w = h / 6.0;
            for i in 0..r.len() {
                r[i] += (a[i] + (b[i] + c[i]) * 2.0 + d4[i]) * w;
            }
        }
        if step % 256 == 255 || step + 1 == n_steps {
            max_drift = max_drift.max((trace_re(&rho) - trace0).abs());
        }
    }

    // Hermitize to scrub integrator round-off before validation.
    for j in 0..dim {
        for i in 0..j {
            let avg = (rho[(i, j)] + rho[(j, i)].conj()) / 2.0;
            rho[(i, j)] = avg;
            rho[(j, i)] = avg.conj();
        }
        rho[(j, j)] = C64::new(rho[(j, j)].re, 0.0);
    }
    let negativity = min_eigenvalue(&rho);
    let diagnostics = EvolutionDiagnostics {
        steps: n_steps,
        step_size: h,
        trace_drift: max_drift,
        negativity,
    };
    if max_drift > 1e-8 * trace0.max(1.0) {
        return Err(CoreError::IntegratorFailure {
            reason: "trace drift beyond tolerance",
            steps: n_steps,
            trace_drift: max_drift,
            negativity,
        });
    }
    if negativity < -1e-7 {
        return Err(CoreError::IntegratorFailure {
            reason: "negativity beyond tolerance",
            steps: n_steps,
            trace_drift: max_drift,
            negativity,
        });
    }
    Ok(EvolutionResult {
        state: OscillatorState::from_density_weighted(rho, rho0.weight())?,
        diagnostics,
    })
}

fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// `out = base + k * scale`
fn axpy_into(out: &mut CMatrix, base: &CMatrix, k: &CMatrix, scale: f64) {
    let o = out.as_mut_slice();
    let b = base.as_slice();
    let kk = k.as_slice();
    for i in 0..o.len() {
        o[i] = b[i] + kk[i] * scale;
    }
}

/// Precomputed right-hand-side applicator.
enum RhsContext {
    /// Diagonal Hamiltonian: rhs[m,n] = c[m,n] rho[m,n] + loss[m,n] rho[m+1,n+1]
    Diagonal { dim: usize, coeff: CMatrix, loss: Vec<f64> },
    /// Dense Hamiltonian: commutator by matrix products, dissipators by shifts
    Dense { dim: usize, h: CMatrix, kappa: f64, kappa_phi: f64, damp: Vec<f64> },
}

impl RhsContext {
    fn new(hamiltonian: &FockOperator, noise: &NoiseSpec) -> Self {
        let dim = hamiltonian.dim();
        let kappa = noise.kappa;
        let kphi = noise.kappa_phi;
        if hamiltonian.is_diagonal() {
            let mut coeff = CMatrix::zeros(dim, dim);
            let mut loss = vec![0.0f64; dim * dim];
            for n in 0..dim {
                for m in 0..dim {
                    let hm = hamiltonian.data()[(m, m)].re;
                    let hn = hamiltonian.data()[(n, n)].re;
                    let damp = kappa * (m + n) as f64 / 2.0
                        + kphi * ((m as f64) - (n as f64)).powi(2) / 2.0;
                    coeff[(m, n)] = C64::new(-damp, -(hm - hn));
                    if m + 1 < dim && n + 1 < dim {
                        loss[n * dim + m] =
                            kappa * (((m + 1) * (n + 1)) as f64).sqrt();
                    }
                }
            }
            RhsContext::Diagonal { dim, coeff, loss }
        } else {
            let damp = (0..dim)
                .map(|n| kappa * n as f64 + kphi * (n as f64) * (n as f64))
                .collect();
            RhsContext::Dense { dim, h: hamiltonian.data().clone(), kappa, kappa_phi: kphi, damp }
        }
    }

    fn eval(&self, rho: &CMatrix, out: &mut CMatrix) {
        match self {
            RhsContext::Diagonal { dim, coeff, loss } => {
                let d = *dim;
                let o = out.as_mut_slice();
                let r = rho.as_slice();
                let c = coeff.as_slice();
                for i in 0..o.len() {
                    o[i] = c[i] * r[i];
                }
                // a rho adag term: shifted diagonal block
                for n in 0..d - 1 {
                    let base = n * d;
                    for m in 0..d - 1 {
                        let i = base + m;
                        o[i] += r[i + d + 1] * loss[i];
                    }
                }
            }
            RhsContext::Dense { dim, h, kappa, kappa_phi, damp } => {
                let d = *dim;
                // -i (H rho - rho H)
                let hr = h * rho;
                let rh = rho * h;
                let o = out.as_mut_slice();
                let hr_s = hr.as_slice();
                let rh_s = rh.as_slice();
                let r = rho.as_slice();
                let mi = C64::new(0.0, -1.0);
                for i in 0..o.len() {
                    o[i] = mi * (hr_s[i] - rh_s[i]);
                }
                for n in 0..d {
                    for m in 0..d {
                        let i = n * d + m;
                        // -1/2 {kappa n + kphi n^2, rho} elementwise
                        o[i] -= r[i] * (0.5 * (damp[m] + damp[n]));
                        // kappa a rho adag
                        if m + 1 < d && n + 1 < d {
                            o[i] += r[i + d + 1]
                                * (kappa * (((m + 1) * (n + 1)) as f64).sqrt());
                        }
                        // kphi n rho n
                        o[i] += r[i] * (kappa_phi * m as f64 * n as f64);
                    }
                }
            }
        }
    }
}
