// end-to-end prototype of the magic-state preparation pipelines
use gkpsim_core::decoders::{
    build_sbs_basis, decode_perfect_ed, decode_sbs, logical_fidelity, ErrorGrid,
};
use gkpsim_core::evolution::{lindblad_evolve, NoiseSpec};
use gkpsim_core::fock::{FockOperator, OscillatorState};
use gkpsim_core::gates::magic_state_target;
use gkpsim_core::gkp::{build_code, logical_state, LogicalLabel};
use gkpsim_core::sbs::{apply_rounds, build_sbs_round, SbsParams};
use gkpsim_core::{C64, CMatrix};
use std::f64::consts::PI;

fn kerr_h(dim: usize) -> FockOperator {
    FockOperator::from_diagonal_fn(dim, |n| C64::new(-PI / 8.0 * (n * n) as f64, 0.0)).unwrap()
}

fn main() {
    let t0 = std::time::Instant::now();
    let target = magic_state_target();

    // ---- fig2a points at delta = 0.25, D = 100
    let dim = 100;
    let code = build_code(0.25, dim).unwrap();
    let h = kerr_h(dim);
    let psi0 = logical_state(&code, LogicalLabel::PlusY).unwrap();
    let mut bound_1em3 = 0.0;
    for gamma in [1e-4, 3e-4, 1e-3] {
        let noise = NoiseSpec::from_gamma(gamma, 1.0).unwrap();
        let out = lindblad_evolve(&psi0, &h, &noise).unwrap();
        let (q, success) = decode_perfect_ed(&out.state, &code).unwrap();
        let f = logical_fidelity(&q, &target);
        println!(
            "[{:>6.1?}] fig2a delta=0.25 gamma={gamma:.1e}: infid={:.4e} success={success:.4} steps={} drift={:.1e} neg={:.1e}",
            t0.elapsed(), 1.0 - f, out.diagnostics.steps, out.diagnostics.trace_drift, out.diagnostics.negativity
        );
        if gamma == 1e-3 { bound_1em3 = 1.0 - f; }
    }

    // ---- fig2b at delta = 0.25, gamma = 1e-3
    let basis = build_sbs_basis(&code, &ErrorGrid::default()).unwrap();
    println!("[{:>6.1?}] basis built: {} states, ortho {:.2e}", t0.elapsed(), basis.n_states(), basis.orthonormality_defect());
    let params = SbsParams::new(0.25).unwrap();
    let channel = build_sbs_round(&params, dim).unwrap();
    let psi_b = basis.code_cell_state(C64::new(1.0, 0.0), C64::new(0.0, 1.0)).unwrap();
    let noise = NoiseSpec::from_gamma(1e-3, 1.0).unwrap();
    let evolved = lindblad_evolve(&psi_b, &h, &noise).unwrap();
    for n_rounds in [0usize, 1, 2, 5, 30] {
        let out = apply_rounds(&evolved.state, &channel, n_rounds, true).unwrap();
        let q = decode_sbs(&out.state, &basis).unwrap();
        let f = logical_fidelity(&q, &target);
        println!(
            "[{:>6.1?}] fig2b N={n_rounds}: F_sbs infid={:.4e} success={:.4} (ED bound {bound_1em3:.3e})",
            t0.elapsed(), 1.0 - f, out.success_prob
        );
    }

    // ---- realistic headline: delta=0.36, D=60, gamma=1e-2, p(e|g)=1e-3
    let dim = 60;
    let code36 = build_code(0.36, dim).unwrap();
    let h36 = kerr_h(dim);
    let basis36 = build_sbs_basis(&code36, &ErrorGrid::default()).unwrap();
    let params36 = SbsParams::new(0.36).unwrap();
    let channel36 = build_sbs_round(&params36, dim).unwrap().with_confusion(1e-3, 0.0).unwrap();
    let psi36 = basis36.code_cell_state(C64::new(1.0, 0.0), C64::new(0.0, 1.0)).unwrap();
    let gamma: f64 = 1e-2;
    // init loss: free decay with the same gamma over one gate time
    let free = FockOperator::new(CMatrix::zeros(dim, dim), 0).unwrap();
    let init_noise = NoiseSpec::from_gamma(gamma, 1.0).unwrap();
    let after_init = lindblad_evolve(&psi36, &free, &init_noise).unwrap();
    let after_gate = lindblad_evolve(&after_init.state, &h36, &init_noise).unwrap();
    let out = apply_rounds(&after_gate.state, &channel36, 30, true).unwrap();
    let q = decode_sbs(&out.state, &basis36).unwrap();
    let f = logical_fidelity(&q, &target);
    println!(
        "[{:>6.1?}] realistic: F_sbs={:.4} success={:.4}",
        t0.elapsed(), f, out.success_prob
    );
    // no-confusion and clean-start variants
    let channel36c = build_sbs_round(&params36, dim).unwrap();
    let out2 = apply_rounds(&after_gate.state, &channel36c, 30, true).unwrap();
    let q2 = decode_sbs(&out2.state, &basis36).unwrap();
    println!("          no-confusion: F={:.4} success={:.4}", logical_fidelity(&q2, &target), out2.success_prob);
    let after_gate_clean = lindblad_evolve(&psi36, &h36, &init_noise).unwrap();
    let out3 = apply_rounds(&after_gate_clean.state, &channel36, 30, true).unwrap();
    let q3 = decode_sbs(&out3.state, &basis36).unwrap();
    println!("          clean-init:  F={:.4} success={:.4}", logical_fidelity(&q3, &target), out3.success_prob);
}
