// joint scan: per-round loss x per-round dephasing for the realistic point
use gkpsim_core::decoders::{build_sbs_basis, decode_sbs, logical_fidelity, ErrorGrid};
use gkpsim_core::evolution::{lindblad_evolve, NoiseSpec};
use gkpsim_core::fock::FockOperator;
use gkpsim_core::gates::magic_state_target;
use gkpsim_core::gkp::build_code;
use gkpsim_core::sbs::{apply_rounds, build_sbs_round, SbsParams};
use gkpsim_core::{C64, CMatrix};
use std::f64::consts::PI;

fn main() {
    let dim = 60;
    let code = build_code(0.36, dim).unwrap();
    let basis = build_sbs_basis(&code, &ErrorGrid::default()).unwrap();
    let channel = build_sbs_round(&SbsParams::new(0.36).unwrap(), dim).unwrap()
        .with_confusion(1e-3, 0.0).unwrap();
    let psi = basis.code_cell_state(C64::new(1.0, 0.0), C64::new(0.0, 1.0)).unwrap();
    let target = magic_state_target();
    let h = FockOperator::from_diagonal_fn(dim, |n| C64::new(-PI / 8.0 * (n * n) as f64, 0.0)).unwrap();
    let free = FockOperator::new(CMatrix::zeros(dim, dim), 0).unwrap();
    let gamma = 1e-2f64;
    let init = NoiseSpec::from_gamma(gamma, 1.0).unwrap();
    let s1 = lindblad_evolve(&psi, &free, &init).unwrap();
    for (g_round, kphi) in [
        (1e-3, 0.0), (1e-3, 3e-4), (1e-3, 1e-3), (1e-3, 3e-3),
        (5e-4, 1e-3), (5e-4, 3e-3), (1.5e-3, 1e-3),
    ] {
        let gate = NoiseSpec::from_gamma(gamma, 1.0).unwrap().with_dephasing(kphi).unwrap();
        let s2 = lindblad_evolve(&s1.state, &h, &gate).unwrap();
        let round_noise = NoiseSpec::from_gamma(g_round, 1.0).unwrap().with_dephasing(kphi).unwrap();
        let mut cur = s2.state.clone();
        let mut success = 1.0;
        for _ in 0..30 {
            let out = apply_rounds(&cur, &channel, 1, true).unwrap();
            success *= out.success_prob;
            cur = lindblad_evolve(&out.state, &free, &round_noise).unwrap().state;
        }
        let q = decode_sbs(&cur, &basis).unwrap();
        println!(
            "g_round={g_round:.1e} kphi={kphi:.1e}: F={:.5} success={success:.4}",
            logical_fidelity(&q, &target)
        );
    }
}
