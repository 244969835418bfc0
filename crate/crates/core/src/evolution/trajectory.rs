//! Quantum-jump (Monte Carlo wavefunction) unraveling of the loss/dephasing
//! Lindbladian, used as an independent oracle for the master-equation
//! integrator.
//!
//! The Hamiltonian must be diagonal (the Kerr gate and free decay are), so
//! the no-jump evolution `exp[(-i h_n - (kappa n + kappa_phi n^2)/2) t]` is
//! applied exactly; jump times come from bisecting the monotone norm decay.
//! Trajectory `i` draws from its own counter-based RNG stream, so results
//! are independent of scheduling and bit-identical for a fixed seed.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{CoreError, Result};
use crate::fock::{FockOperator, OscillatorState};
use crate::par;
use crate::{C64, CMatrix, CVector};

/// Sample statistics of per-trajectory functionals.
#[derive(Debug, Clone)]
pub struct TrajectoryStats {
    pub means: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub n_samples: usize,
}

#[derive(Debug, Clone)]
pub struct TrajectoryResult {
    /// Trajectory-averaged density matrix.
    pub mean_state: OscillatorState,
    pub n_traj: usize,
    /// Statistics of the caller-supplied functionals (empty when none).
    pub stats: TrajectoryStats,
}

/// Unravels the same Lindbladian as [`super::lindblad_evolve`] with
/// `n_traj` jump trajectories. Deterministic for a fixed `seed`.
pub fn trajectory_oracle(
    rho0: &OscillatorState,
    hamiltonian: &FockOperator,
    noise: &super::NoiseSpec,
    n_traj: usize,
    seed: u64,
) -> Result<TrajectoryResult> {
    trajectory_oracle_with(rho0, hamiltonian, noise, n_traj, seed, 0, |_| Vec::new())
}

/// [`trajectory_oracle`] that additionally evaluates `n_funcs` scalar
/// functionals on every final normalized trajectory ket and returns their
/// means, standard errors and sample covariance.
pub fn trajectory_oracle_with<F>(
    rho0: &OscillatorState,
    hamiltonian: &FockOperator,
    noise: &super::NoiseSpec,
    n_traj: usize,
    seed: u64,
    n_funcs: usize,
    functionals: F,
) -> Result<TrajectoryResult>
where
    F: Fn(&CVector) -> Vec<f64> + Sync,
{
    if n_traj == 0 {
        return Err(CoreError::InvalidParameter {
            name: "n_traj",
            reason: "need at least one trajectory".into(),
        });
    }
    let dim = hamiltonian.dim();
    if rho0.dim() != dim {
        return Err(CoreError::DimensionMismatch { expected: dim, actual: rho0.dim() });
    }
    if !hamiltonian.is_diagonal() {
        return Err(CoreError::InvalidParameter {
            name: "hamiltonian",
            reason: "trajectory oracle supports diagonal Hamiltonians only".into(),
        });
    }
    let h_diag: Vec<f64> = (0..dim).map(|n| hamiltonian.data()[(n, n)].re).collect();
    let decay: Vec<f64> = (0..dim)
        .map(|n| noise.kappa * n as f64 + noise.kappa_phi * (n as f64) * (n as f64))
        .collect();

    // initial pure-state ensemble
    let ensemble: Vec<(f64, CVector)> = if let Some(ket) = rho0.ket() {
        vec![(1.0, ket.clone())]
    } else {
        let (vals, vecs) = crate::fock::hermitian_eigen(&rho0.density());
        let total: f64 = vals.iter().map(|&v| v.max(0.0)).sum();
        vals.iter()
            .enumerate()
            .filter(|(_, &v)| v > 1e-12 * total)
            .map(|(k, &v)| (v.max(0.0) / total, vecs.column(k).into_owned()))
            .collect()
    };

    // fixed chunk layout keeps the reduction order independent of threads
    let n_chunks = 64.min(n_traj);
    let bounds: Vec<(usize, usize)> = (0..n_chunks)
        .map(|k| (k * n_traj / n_chunks, (k + 1) * n_traj / n_chunks))
        .collect();

    let duration = noise.duration;
    let chunk_results = par::map_collect(n_chunks, |k| {
        let (lo, hi) = bounds[k];
        let mut rho_sum = CMatrix::zeros(dim, dim);
        let mut f_sum = vec![0.0f64; n_funcs];
        let mut f_outer = DMatrix::<f64>::zeros(n_funcs, n_funcs);
        for traj in lo..hi {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(traj as u64 + 1);
            let mut psi = sample_initial(&ensemble, &mut rng);
            run_one(&mut psi, &h_diag, &decay, noise, duration, &mut rng);
            accumulate_outer(&mut rho_sum, &psi);
            if n_funcs > 0 {
                let vals = functionals(&psi);
                debug_assert_eq!(vals.len(), n_funcs);
                for i in 0..n_funcs {
                    f_sum[i] += vals[i];
                    for j in 0..n_funcs {
                        f_outer[(i, j)] += vals[i] * vals[j];
                    }
                }
            }
        }
        (rho_sum, f_sum, f_outer)
    });

    let mut rho_sum = CMatrix::zeros(dim, dim);
    let mut f_sum = vec![0.0f64; n_funcs];
    let mut f_outer = DMatrix::<f64>::zeros(n_funcs, n_funcs);
    for (r, fs, fo) in chunk_results {
        rho_sum += r;
        for i in 0..n_funcs {
            f_sum[i] += fs[i];
        }
        f_outer += fo;
    }
    let nf = n_traj as f64;
    let mean_rho = rho_sum / C64::new(nf, 0.0);

    let means: Vec<f64> = f_sum.iter().map(|s| s / nf).collect();
    let mut covariance = DMatrix::<f64>::zeros(n_funcs, n_funcs);
    if n_traj > 1 {
        for i in 0..n_funcs {
            for j in 0..n_funcs {
                covariance[(i, j)] =
                    (f_outer[(i, j)] - nf * means[i] * means[j]) / (nf - 1.0);
            }
        }
    }
    let standard_errors: Vec<f64> =
        (0..n_funcs).map(|i| (covariance[(i, i)].max(0.0) / nf).sqrt()).collect();

    Ok(TrajectoryResult {
        mean_state: OscillatorState::from_density(hermitize(mean_rho))?,
        n_traj,
        stats: TrajectoryStats { means, standard_errors, covariance, n_samples: n_traj },
    })
}

fn hermitize(mut m: CMatrix) -> CMatrix {
    let d = m.nrows();
    for j in 0..d {
        for i in 0..j {
            let avg = (m[(i, j)] + m[(j, i)].conj()) / 2.0;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(j, j)] = C64::new(m[(j, j)].re, 0.0);
    }
    m
}

fn sample_initial(ensemble: &[(f64, CVector)], rng: &mut ChaCha12Rng) -> CVector {
    if ensemble.len() == 1 {
        return ensemble[0].1.clone();
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (w, v) in ensemble {
        acc += w;
        if u < acc {
            return v.clone();
        }
    }
    ensemble.last().expect("nonempty ensemble").1.clone()
}

fn accumulate_outer(rho: &mut CMatrix, psi: &CVector) {
    let d = psi.len();
    for n in 0..d {
        let cn = psi[n].conj();
        if cn == C64::new(0.0, 0.0) {
            continue;
        }
        for m in 0..d {
            rho[(m, n)] += psi[m] * cn;
        }
    }
}

/// Evolves one trajectory in place over `duration`; `psi` enters and leaves
/// normalized.
fn run_one(
    psi: &mut CVector,
    h_diag: &[f64],
    decay: &[f64],
    noise: &super::NoiseSpec,
    duration: f64,
    rng: &mut ChaCha12Rng,
) {
    let lossless = noise.kappa == 0.0 && noise.kappa_phi == 0.0;
    let mut t = 0.0;
    loop {
        let remaining = duration - t;
        if remaining <= 0.0 {
            break;
        }
        if lossless {
            propagate(psi, h_diag, decay, remaining);
            break;
        }
        let r: f64 = rng.random();
        if norm_sq_after(psi, decay, remaining) >= r {
            propagate(psi, h_diag, decay, remaining);
            break;
        }
        // bisect the jump time: norm^2 is monotone decreasing in s
        let mut lo = 0.0f64;
        let mut hi = remaining;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if norm_sq_after(psi, decay, mid) >= r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        propagate(psi, h_diag, decay, s);
        apply_jump(psi, noise, rng);
        t += s;
    }
    let n = psi.norm();
    if n > 0.0 {
        *psi /= C64::new(n, 0.0);
    }
}

fn propagate(psi: &mut CVector, h_diag: &[f64], decay: &[f64], s: f64) {
    for n in 0..psi.len() {
        let amp = (-0.5 * decay[n] * s).exp();
        let phase = C64::new(0.0, -h_diag[n] * s).exp();
        psi[n] *= phase * amp;
    }
}

fn norm_sq_after(psi: &CVector, decay: &[f64], s: f64) -> f64 {
    let mut total = 0.0;
    for n in 0..psi.len() {
        let w = psi[n].norm_sqr();
        if w > 0.0 {
            total += w * (-decay[n] * s).exp();
        }
    }
    total
}

fn apply_jump(psi: &mut CVector, noise: &super::NoiseSpec, rng: &mut ChaCha12Rng) {
    let dim = psi.len();
    let mut w_loss = 0.0;
    let mut w_deph = 0.0;
    for n in 0..dim {
        let w = psi[n].norm_sqr();
        w_loss += noise.kappa * n as f64 * w;
        w_deph += noise.kappa_phi * (n as f64) * (n as f64) * w;
    }
    let total = w_loss + w_deph;
    if total <= 0.0 {
        return;
    }
    let pick_loss = if w_deph == 0.0 {
        true
    } else if w_loss == 0.0 {
        false
    } else {
        rng.random::<f64>() < w_loss / total
    };
    if pick_loss {
        for n in 0..dim - 1 {
            psi[n] = psi[n + 1] * ((n + 1) as f64).sqrt();
        }
        psi[dim - 1] = C64::new(0.0, 0.0);
    } else {
        for n in 0..dim {
            psi[n] *= n as f64;
        }
    }
    let norm = psi.norm();
    if norm > 0.0 {
        *psi /= C64::new(norm, 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::kerr_hamiltonian;
    use super::super::{lindblad_evolve, NoiseSpec};
    use super::*;
    use crate::gates::kerr_unitary;
    use crate::gkp::{build_code, logical_state, LogicalLabel};

    #[test]
    fn lossless_trajectories_are_exact_unitary_evolution() {
        let dim = 40;
        let psi0 = OscillatorState::coherent(dim, C64::new(1.0, 0.3)).unwrap();
        let h = kerr_hamiltonian(dim);
        let noise = NoiseSpec::new(0.0, 0.0, 1.0).unwrap();
        let res = trajectory_oracle(&psi0, &h, &noise, 3, 7).unwrap();
        let target = psi0.apply(&kerr_unitary(dim).unwrap()).unwrap();
        let f = res.mean_state.fidelity_to_pure(target.ket().unwrap()).unwrap();
        assert!(1.0 - f < 1e-12, "infidelity {}", 1.0 - f);
    }

    #[test]
    fn seed_reproducibility_is_bit_exact() {
        let dim = 24;
        let psi0 = OscillatorState::coherent(dim, C64::new(1.2, 0.0)).unwrap();
        let h = kerr_hamiltonian(dim);
        let noise = NoiseSpec::from_gamma(0.05, 1.0).unwrap();
        let a = trajectory_oracle(&psi0, &h, &noise, 64, 42).unwrap();
        let b = trajectory_oracle(&psi0, &h, &noise, 64, 42).unwrap();
        assert_eq!(a.mean_state.density(), b.mean_state.density());
        let c = trajectory_oracle(&psi0, &h, &noise, 64, 43).unwrap();
        assert_ne!(a.mean_state.density(), c.mean_state.density());
    }

    #[test]
    fn matches_master_equation_on_mean_photon() {
        // free decay of a codeword: compare <n> against the RK4 solution
        let code = build_code(0.36, 60).unwrap();
        let psi0 = logical_state(&code, LogicalLabel::Zero).unwrap();
        let h = crate::fock::FockOperator::new(CMatrix::zeros(60, 60), 0).unwrap();
        let noise = NoiseSpec::from_gamma(5e-2, 1.0).unwrap();
        let me = lindblad_evolve(&psi0, &h, &noise).unwrap();
        let r = trajectory_oracle_with(&psi0, &h, &noise, 2000, 5, 1, |ket| {
            let mut n_exp = 0.0;
            for n in 0..ket.len() {
                n_exp += n as f64 * ket[n].norm_sqr();
            }
            vec![n_exp]
        })
        .unwrap();
        let want = me.state.mean_photon();
        let got = r.stats.means[0];
        let se = r.stats.standard_errors[0].max(1e-12);
        assert!(
            (got - want).abs() < 3.0 * se,
            "MC mean photon {got} vs ME {want}, SE {se}"
        );
    }

    #[test]
    fn mixed_initial_state_sampling() {
        let a = OscillatorState::fock(8, 0).unwrap();
        let b = OscillatorState::fock(8, 2).unwrap();
        let rho = OscillatorState::from_density(
            a.density() * C64::new(0.25, 0.0) + b.density() * C64::new(0.75, 0.0),
        )
        .unwrap();
        let h = crate::fock::FockOperator::new(CMatrix::zeros(8, 8), 0).unwrap();
        let noise = NoiseSpec::new(0.0, 0.0, 0.1).unwrap();
        let r = trajectory_oracle(&rho, &h, &noise, 4000, 11).unwrap();
        let p = r.mean_state.photon_distribution();
        assert!((p[0] - 0.25).abs() < 0.03, "p0 {}", p[0]);
        assert!((p[2] - 0.75).abs() < 0.03, "p2 {}", p[2]);
    }

    #[test]
    fn rejects_non_diagonal_hamiltonian() {
        let q = crate::fock::position_op(8).unwrap();
        let psi0 = OscillatorState::vacuum(8).unwrap();
        let noise = NoiseSpec::new(0.1, 0.0, 1.0).unwrap();
        assert!(trajectory_oracle(&psi0, &q, &noise, 10, 1).is_err());
    }
}
