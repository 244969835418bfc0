//! Experiment runners: the loss sweeps behind the two fidelity figures, the
//! Wigner panels, the realistic combined-noise scenario, steady-state
//! iteration and a quick invariant battery.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use gkpsim_core::decoders::{
    build_sbs_basis, decode_perfect_ed, decode_sbs, logical_fidelity, ErrorGrid,
};
use gkpsim_core::evolution::{lindblad_evolve, EvolutionDiagnostics, NoiseSpec};
use gkpsim_core::fock::{
    displacement, ladder_ops, linspace, position_op, wigner, FockOperator, OscillatorState,
};
use gkpsim_core::gates::{cubic_gate, fourier_gate, kerr_unitary, magic_state_target};
use gkpsim_core::gkp::{build_code, envelope_commutator_norm, logical_state, LogicalLabel};
use gkpsim_core::sbs::{apply_rounds, build_sbs_round, steady_state_rounds, SbsParams, SbsRecord};
use gkpsim_core::{par, C64, CMatrix};

use crate::config::{DecoderKind, SweepConfig};
use crate::output;
use crate::{ExperimentError, Result};

/// One sweep point of the results CSV.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub gamma: f64,
    pub n_rounds: usize,
    pub decoder: String,
    pub fidelity: f64,
    pub infidelity: f64,
    pub success_prob: f64,
    pub dim: usize,
    /// semicolon-joined flags: truncation-convergence state plus scenario
    /// variant tags
    pub flags: String,
}

/// Per-point integrator diagnostics kept in the JSON record.
#[derive(Debug, Clone, Serialize)]
pub struct PointDiagnostics {
    pub delta: f64,
    pub gamma: f64,
    pub n_rounds: usize,
    pub evolution: Option<EvolutionDiagnostics>,
    pub wall_ms: u128,
}

/// Full run record: reproducible from its config snapshot and seed.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub config: SweepConfig,
    pub code_version: String,
    pub points: Vec<SweepPoint>,
    pub diagnostics: Vec<PointDiagnostics>,
    pub sbs_records: Vec<Vec<SbsRecord>>,
    pub wall_ms: u128,
    pub notes: Vec<String>,
}

impl RunRecord {
    fn new(command: &str, config: &SweepConfig) -> Self {
        Self {
            command: command.into(),
            config: config.clone(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            points: Vec::new(),
            diagnostics: Vec::new(),
            sbs_records: Vec::new(),
            wall_ms: 0,
            notes: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    /// Writes `<name>.csv` and `<name>_run.json` (plus sBs record streams).
    pub fn write(&self, out_dir: &Path, name: &str) -> Result<()> {
        output::write_text(&out_dir.join(format!("{name}.csv")), &output::results_csv(&self.points))?;
        output::write_text(&out_dir.join(format!("{name}_run.json")), &self.to_json())?;
        if !self.sbs_records.is_empty() {
            let mut lines = String::new();
            for (point, records) in self.sbs_records.iter().enumerate() {
                for r in records {
                    writeln!(
                        lines,
                        "{}",
                        serde_json::json!({
                            "point": point,
                            "round": r.round,
                            "outcome_model": r.outcome_model,
                            "p_gg": r.p_gg,
                            "p_ge": r.p_ge,
                            "p_eg": r.p_eg,
                            "p_ee": r.p_ee,
                            "success_weight": r.weight_after,
                        })
                    )
                    .expect("string write");
                }
            }
            output::write_text(&out_dir.join(format!("{name}_sbs_records.jsonl")), &lines)?;
        }
        Ok(())
    }
}

/// Kerr Hamiltonian `(K/2) n^2` with `K = -pi/4` in units of the gate time,
/// so that evolving for `t = 1` realizes `exp(i pi n^2 / 8)`.
pub fn kerr_hamiltonian(dim: usize) -> FockOperator {
    FockOperator::from_diagonal_fn(dim, |n| C64::new(-PI / 8.0 * (n * n) as f64, 0.0))
        .expect("diagonal Kerr Hamiltonian")
}

fn zero_hamiltonian(dim: usize) -> FockOperator {
    FockOperator::new(CMatrix::zeros(dim, dim), 0).expect("zero Hamiltonian")
}

struct PipelineOutput {
    fidelity: f64,
    success: f64,
    evolution: Option<EvolutionDiagnostics>,
    records: Vec<SbsRecord>,
}

/// The state-preparation pipeline at one `(delta, gamma, n_rounds)` point.
///
/// `PerfectEd`: prepare `|+Y_D>`, evolve under Kerr + loss for one gate
/// time, decode with the perfect-error-detection map.
/// `Sbs`: prepare the `(0,0)`-cell `|+Y>`, optionally pre-damp it
/// (`gamma_init`), evolve, apply post-selected EC rounds with the configured
/// measurement confusion, decode with the subsystem map.
fn run_point(
    config: &SweepConfig,
    delta: f64,
    gamma: f64,
    n_rounds: usize,
    dim: usize,
) -> Result<PipelineOutput> {
    let code = build_code(delta, dim)?;
    let h = kerr_hamiltonian(dim);
    let target = magic_state_target();
    let mut noise = NoiseSpec::from_gamma(gamma, 1.0)?;
    if let Some(kphi) = config.dephasing_rate {
        noise = noise.with_dephasing(kphi)?;
    }
    match config.decoder {
        DecoderKind::PerfectEd => {
            let psi0 = logical_state(&code, LogicalLabel::PlusY)?;
            let evolved = lindblad_evolve(&psi0, &h, &noise)?;
            let (qubit, success) = decode_perfect_ed(&evolved.state, &code)?;
            let fidelity = logical_fidelity(&qubit, &target);
            Ok(PipelineOutput {
                fidelity,
                success,
                evolution: Some(evolved.diagnostics),
                records: Vec::new(),
            })
        }
        DecoderKind::Sbs => {
            let basis = build_sbs_basis(&code, &ErrorGrid::default())?;
            let params = SbsParams::new(delta)?;
            let channel = build_sbs_round(&params, dim)?
                .with_confusion(config.confusion.0, config.confusion.1)?;
            let mut state = basis.code_cell_state(C64::new(1.0, 0.0), C64::new(0.0, 1.0))?;
            if let Some(g_init) = config.gamma_init {
                if g_init > 0.0 {
                    let init_noise = NoiseSpec::from_gamma(g_init, 1.0)?;
                    state = lindblad_evolve(&state, &zero_hamiltonian(dim), &init_noise)?.state;
                }
            }
            let evolved = lindblad_evolve(&state, &h, &noise)?;
            let mut current = evolved.state.clone();
            let mut success = 1.0;
            let mut records = Vec::new();
            if let Some(g_round) = config.per_round_loss_gamma.filter(|g| *g > 0.0) {
                // finite round duration: loss between instantaneous rounds
                let round_noise = NoiseSpec::from_gamma(g_round, 1.0)?;
                let h0 = zero_hamiltonian(dim);
                for _ in 0..n_rounds {
                    let out = apply_rounds(&current, &channel, 1, true)?;
                    success *= out.success_prob;
                    records.extend(out.records);
                    current = lindblad_evolve(&out.state, &h0, &round_noise)?.state;
                }
            } else {
                let out = apply_rounds(&current, &channel, n_rounds, true)?;
                success = out.success_prob;
                records = out.records;
                current = out.state;
            }
            let qubit = decode_sbs(&current, &basis)?;
            let fidelity = logical_fidelity(&qubit, &target);
            Ok(PipelineOutput {
                fidelity,
                success,
                evolution: Some(evolved.diagnostics),
                records,
            })
        }
    }
}

/// Truncation-convergence flag for a point: reruns the pipeline at
/// `dim + 20` and compares infidelity and success probability.
fn convergence_flag(
    config: &SweepConfig,
    delta: f64,
    gamma: f64,
    n_rounds: usize,
    dim: usize,
    base: &PipelineOutput,
) -> Result<&'static str> {
    let refined = run_point(config, delta, gamma, n_rounds, dim + 20)?;
    let inf_ok = {
        let a = 1.0 - base.fidelity;
        let b = 1.0 - refined.fidelity;
        (a - b).abs() <= 1e-7 + 0.05 * a.abs()
    };
    let succ_ok = (base.success - refined.success).abs() <= 1e-6 + 0.05 * base.success.abs();
    Ok(if inf_ok && succ_ok { "ok" } else { "trunc-divergent" })
}

fn sweep(command: &str, config: &SweepConfig, decoder: DecoderKind) -> Result<RunRecord> {
    let mut cfg = config.clone();
    cfg.decoder = decoder;
    cfg.validate()?;
    let start = Instant::now();
    let mut record = RunRecord::new(command, &cfg);

    let mut grid: Vec<(f64, f64, usize)> = Vec::new();
    for &delta in &cfg.deltas {
        for &gamma in &cfg.gammas {
            match decoder {
                DecoderKind::PerfectEd => grid.push((delta, gamma, 0)),
                DecoderKind::Sbs => {
                    for &n in &cfg.n_rounds {
                        grid.push((delta, gamma, n));
                    }
                }
            }
        }
    }

    // points run in a parallel worker pool; results merged in grid order
    let results = par::map_collect(grid.len(), |k| {
        let (delta, gamma, n_rounds) = grid[k];
        let dim = cfg.dim_for(delta);
        let t = Instant::now();
        let out = run_point(&cfg, delta, gamma, n_rounds, dim);
        let flag: Result<&'static str> = match (&out, cfg.check_truncation) {
            (Ok(base), true) => convergence_flag(&cfg, delta, gamma, n_rounds, dim, base),
            (Ok(_), false) => Ok("unchecked"),
            (Err(_), _) => Ok("failed"),
        };
        (out, flag, t.elapsed().as_millis())
    });

    for ((delta, gamma, n_rounds), (out, flag, wall_ms)) in grid.into_iter().zip(results) {
        let dim = cfg.dim_for(delta);
        match out {
            Ok(p) => {
                record.points.push(SweepPoint {
                    delta,
                    gamma,
                    n_rounds,
                    decoder: decoder.label().into(),
                    fidelity: p.fidelity,
                    infidelity: 1.0 - p.fidelity,
                    success_prob: p.success,
                    dim,
                    flags: flag?.into(),
                });
                record.diagnostics.push(PointDiagnostics {
                    delta,
                    gamma,
                    n_rounds,
                    evolution: p.evolution,
                    wall_ms,
                });
                if !p.records.is_empty() {
                    record.sbs_records.push(p.records);
                }
            }
            Err(e) => {
                // recorded per point without aborting the sweep
                record.notes.push(format!(
                    "point (delta {delta}, gamma {gamma}, rounds {n_rounds}) failed: {e}"
                ));
            }
        }
    }
    record.wall_ms = start.elapsed().as_millis();
    Ok(record)
}

/// Loss sweep with the perfect-error-detection decoder.
pub fn run_fig2a(config: &SweepConfig) -> Result<RunRecord> {
    sweep("fig2a", config, DecoderKind::PerfectEd)
}

/// Loss sweep through the post-selected EC pipeline and subsystem decoder.
pub fn run_fig2b(config: &SweepConfig) -> Result<RunRecord> {
    sweep("fig2b", config, DecoderKind::Sbs)
}

/// Combined realistic scenario: noisy initialization, lossy gate, noisy
/// post-selected error correction. Emits the headline point plus the
/// no-confusion and clean-initialization comparison variants.
pub fn run_realistic(config: &SweepConfig) -> Result<RunRecord> {
    let mut cfg = config.clone();
    cfg.decoder = DecoderKind::Sbs;
    if cfg.deltas.len() != 1 || cfg.gammas.len() != 1 || cfg.n_rounds.len() != 1 {
        return Err(ExperimentError::Config(
            "realistic scenario expects exactly one delta, gamma and round count".into(),
        ));
    }
    if cfg.gamma_init.is_none() {
        // initialization exposed to loss for one gate time
        cfg.gamma_init = Some(cfg.gammas[0]);
    }
    if cfg.per_round_loss_gamma.is_none() {
        // finite EC-round duration of ~0.1 gate times
        cfg.per_round_loss_gamma = Some(cfg.gammas[0] / 10.0);
    }
    cfg.validate()?;
    let start = Instant::now();
    let mut record = RunRecord::new("realistic", &cfg);
    record.notes.push(
        "assumptions: initialization suffers the per-gate loss once; EC rounds carry loss for \
         0.1 gate times each (finite round duration); measurement confusion applies per ancilla \
         readout; dephasing off unless configured"
            .into(),
    );
    let delta = cfg.deltas[0];
    let gamma = cfg.gammas[0];
    let n_rounds = cfg.n_rounds[0];
    let dim = cfg.dim_for(delta);

    let mut variants: Vec<(&'static str, SweepConfig)> = Vec::new();
    variants.push(("headline", cfg.clone()));
    let mut no_confusion = cfg.clone();
    no_confusion.confusion = (0.0, 0.0);
    variants.push(("no-confusion", no_confusion));
    let mut clean_init = cfg.clone();
    clean_init.gamma_init = Some(0.0);
    variants.push(("clean-init", clean_init));

    let results = par::map_collect(variants.len(), |k| {
        let (_, vcfg) = &variants[k];
        let t = Instant::now();
        (run_point(vcfg, delta, gamma, n_rounds, dim), t.elapsed().as_millis())
    });
    for ((tag, vcfg), (out, wall_ms)) in variants.iter().zip(results) {
        let p = out?;
        let flag = if vcfg.check_truncation {
            convergence_flag(vcfg, delta, gamma, n_rounds, dim, &p)?
        } else {
            "unchecked"
        };
        record.points.push(SweepPoint {
            delta,
            gamma,
            n_rounds,
            decoder: "sbs".into(),
            fidelity: p.fidelity,
            infidelity: 1.0 - p.fidelity,
            success_prob: p.success,
            dim,
            flags: format!("{tag};{flag}"),
        });
        record.diagnostics.push(PointDiagnostics {
            delta,
            gamma,
            n_rounds,
            evolution: p.evolution,
            wall_ms,
        });
        record.sbs_records.push(p.records);
    }
    record.wall_ms = start.elapsed().as_millis();
    Ok(record)
}

/// Magic-state Wigner panels: (a) `|+Y_D>`, (b) `U_K |+Y_D>`, (c) `|+_D>`,
/// (d) cubic-gate `|+_D>`. Writes per-panel CSV + metadata + SVG and
/// returns the panel moments used by the envelope-contrast checks.
pub fn run_fig1(config: &SweepConfig, out_dir: &Path) -> Result<Fig1Summary> {
    let cfg = config.clone();
    cfg.validate()?;
    let delta = *cfg.deltas.first().ok_or_else(|| {
        ExperimentError::Config("fig1 needs one delta (default 0.25)".into())
    })?;
    let dim = cfg.dim_for(delta);
    let code = build_code(delta, dim)?;
    let q_op = position_op(dim)?;
    let p_op = gkpsim_core::fock::momentum_op(dim)?;

    let plus_y = logical_state(&code, LogicalLabel::PlusY)?;
    let kerr_out = plus_y.apply(&kerr_unitary(dim)?)?;
    let plus = logical_state(&code, LogicalLabel::Plus)?;
    let cubic_out = plus.apply(&cubic_gate(dim, cfg.cubic_coeffs)?)?;

    let grid = linspace(-cfg.wigner.bound, cfg.wigner.bound, cfg.wigner.points);
    let panels: [(&str, &OscillatorState); 4] =
        [("a", &plus_y), ("b", &kerr_out), ("c", &plus), ("d", &cubic_out)];

    let mut summary = Fig1Summary::default();
    let computed = par::map_collect(panels.len(), |k| wigner(panels[k].1, &grid, &grid));
    for ((name, state), w) in panels.iter().zip(computed) {
        let w = w?;
        output::write_text(&out_dir.join(format!("fig1_{name}.csv")), &w.to_csv())?;
        output::write_text(&out_dir.join(format!("fig1_{name}_meta.json")), &w.meta_json())?;
        output::write_text(&out_dir.join(format!("fig1_{name}.svg")), &output::wigner_svg(&w))?;
        let mean_q = state.expectation(&q_op)?.re;
        let mean_p = state.expectation(&p_op)?.re;
        let abs_mean = w.abs_marginal_mean_q();
        match *name {
            "a" => summary.a = PanelMoments { mean_q, mean_p, abs_marginal_mean_q: abs_mean },
            "b" => summary.b = PanelMoments { mean_q, mean_p, abs_marginal_mean_q: abs_mean },
            "c" => summary.c = PanelMoments { mean_q, mean_p, abs_marginal_mean_q: abs_mean },
            _ => summary.d = PanelMoments { mean_q, mean_p, abs_marginal_mean_q: abs_mean },
        }
        if *name == "a" {
            summary.photon_dist_a = state.photon_distribution();
        }
        if *name == "b" {
            summary.photon_dist_b = state.photon_distribution();
        }
    }
    output::write_text(
        &out_dir.join("fig1_summary.json"),
        &serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    Ok(summary)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PanelMoments {
    pub mean_q: f64,
    pub mean_p: f64,
    pub abs_marginal_mean_q: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Fig1Summary {
    pub a: PanelMoments,
    pub b: PanelMoments,
    pub c: PanelMoments,
    pub d: PanelMoments,
    pub photon_dist_a: Vec<f64>,
    pub photon_dist_b: Vec<f64>,
}

/// Steady-state iteration of post-selected rounds on the lossy gate output.
pub fn run_sbs_steady(config: &SweepConfig, tol: f64, max_rounds: usize) -> Result<RunRecord> {
    let mut cfg = config.clone();
    cfg.decoder = DecoderKind::Sbs;
    cfg.validate()?;
    let start = Instant::now();
    let mut record = RunRecord::new("sbs-steady", &cfg);
    for &delta in &cfg.deltas {
        let dim = cfg.dim_for(delta);
        let code = build_code(delta, dim)?;
        let basis = build_sbs_basis(&code, &ErrorGrid::default())?;
        let params = SbsParams::new(delta)?;
        let channel = build_sbs_round(&params, dim)?;
        let h = kerr_hamiltonian(dim);
        for &gamma in &cfg.gammas {
            let psi0 = basis.code_cell_state(C64::new(1.0, 0.0), C64::new(0.0, 1.0))?;
            let noise = NoiseSpec::from_gamma(gamma, 1.0)?;
            let evolved = lindblad_evolve(&psi0, &h, &noise)?;
            let ss = steady_state_rounds(&evolved.state, &channel, tol, max_rounds)?;
            let qubit = decode_sbs(&ss.state, &basis)?;
            let fidelity = logical_fidelity(&qubit, &magic_state_target());
            record.points.push(SweepPoint {
                delta,
                gamma,
                n_rounds: ss.rounds_used,
                decoder: "sbs".into(),
                fidelity,
                infidelity: 1.0 - fidelity,
                success_prob: ss.round_weights.iter().product(),
                dim,
                flags: if ss.converged { "converged".into() } else { "max-rounds".into() },
            });
            record.notes.push(format!(
                "delta {delta} gamma {gamma}: rounds_used {}, last trace distance {:.3e}",
                ss.rounds_used, ss.last_distance
            ));
        }
    }
    record.wall_ms = start.elapsed().as_millis();
    Ok(record)
}

/// Quick invariant battery (the `validate` subcommand): one line per check.
pub fn validate(out: &mut dyn std::io::Write) -> Result<bool> {
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool, detail: String| {
        all_ok &= ok;
        let _ = writeln!(out, "{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    };

    // ladder algebra
    let dim = 40;
    let (a, adag, num) = ladder_ops(dim)?;
    let comm = a.mul(&adag)?.data() - adag.mul(&a)?.data();
    let mut d = 0.0f64;
    for i in 0..dim - 1 {
        d = d.max((comm[(i, i)] - C64::new(1.0, 0.0)).norm());
    }
    check("ladder commutator", d < 1e-12, format!("interior defect {d:.2e}"));
    let _ = num;

    // displacement composition and inverse
    let ddim = 60;
    let alpha = C64::new(0.4, -0.2);
    let beta = C64::new(-0.3, 0.5);
    let dab = displacement(alpha, ddim)?.mul(&displacement(beta, ddim)?)?;
    let phase = ((alpha * beta.conj() - alpha.conj() * beta) / 2.0).exp();
    let dsum = displacement(alpha + beta, ddim)?.scaled(phase);
    let dd = dab.max_abs_diff_interior(&dsum, 20)?;
    check("displacement composition", dd < 1e-8, format!("defect {dd:.2e}"));

    // Wigner conventions
    let vac = OscillatorState::vacuum(30)?;
    let w = wigner(&vac, &[0.0], &[0.0])?;
    let dv = (w.value(0, 0) - 1.0 / PI).abs();
    check("wigner vacuum peak", dv < 1e-6, format!("|W(0,0) - 1/pi| = {dv:.2e}"));

    // Kerr eigenphases on Hadamard eigenstates
    let code = build_code(0.36, 60)?;
    let u = kerr_unitary(60)?;
    let hp = logical_state(&code, LogicalLabel::PlusH)?;
    let hm = logical_state(&code, LogicalLabel::MinusH)?;
    let ev_p = hp.ket().unwrap().dotc(&u.apply(hp.ket().unwrap())?);
    let ev_m = hm.ket().unwrap().dotc(&u.apply(hm.ket().unwrap())?);
    let dp = (ev_p - C64::new(1.0, 0.0)).norm().max((ev_m - C64::new(0.0, 1.0)).norm());
    check("kerr eigenphases", dp < 1e-9, format!("defect {dp:.2e}"));

    // envelope commutators
    let (_, _, num60) = ladder_ops(60)?;
    let n2 = num60.mul(&num60)?;
    let ce = envelope_commutator_norm(&code, &n2)?;
    check("kerr envelope commutator", ce == 0.0, format!("max |[n^2, E]| = {ce:.2e}"));

    // fourier squared is parity
    let f = fourier_gate(60)?;
    let f2 = f.mul(&f)?;
    let parity = FockOperator::from_diagonal_fn(60, |n| {
        if n % 2 == 0 { C64::new(1.0, 0.0) } else { C64::new(-1.0, 0.0) }
    })?;
    let df = f2.max_abs_diff_interior(&parity, 0)?;
    check("fourier squared is parity", df < 1e-12, format!("defect {df:.2e}"));

    // sBs completeness
    let params = SbsParams::new(0.36)?;
    let channel = build_sbs_round(&params, 60)?;
    let defect = channel.completeness_defect();
    check("sbs kraus completeness", defect <= 1e-8, format!("defect {defect:.2e}"));

    // decoder trace preservation
    let basis = build_sbs_basis(&code, &ErrorGrid::default())?;
    let st = logical_state(&code, LogicalLabel::Plus)?;
    let q = decode_sbs(&st, &basis)?;
    let dt = (q.trace() - 1.0).abs();
    check("sbs decoder trace preserving", dt <= 1e-10, format!("drift {dt:.2e}"));

    // gamma round trip
    let kappa = gkpsim_core::evolution::gamma_to_kappa(1.07e-2, 1.0)?;
    let spec = NoiseSpec::new(kappa, 0.0, 1.0)?;
    let dg = (spec.gamma() - 1.07e-2).abs();
    check("gamma round trip", dg < 1e-14, format!("defect {dg:.2e}"));

    Ok(all_ok)
}
