use gkpsim_core::gkp::{build_code, logical_state, LogicalLabel};
use gkpsim_core::sbs::{apply_rounds, build_sbs_round, SbsParams};
use gkpsim_core::fock::OscillatorState;

fn main() {
    let code = build_code(0.36, 60).unwrap();
    let params = SbsParams::new(0.36).unwrap();
    let channel = build_sbs_round(&params, 60).unwrap();
    let st = logical_state(&code, LogicalLabel::Zero).unwrap();
    let mut cur = st.clone();
    for n in 0..120 {
        let next_raw = channel.apply_reported_gg(&cur.density());
        let next = OscillatorState::from_density(next_raw).unwrap().normalized().unwrap();
        let d = next.trace_distance(&cur).unwrap();
        if n < 8 || n % 10 == 0 || (1e-7..1e-5).contains(&d) {
            println!("round {n}: distance {d:.3e}");
        }
        cur = next;
        if d < 1e-8 { println!("below 1e-8 at {n}"); break; }
    }
}
