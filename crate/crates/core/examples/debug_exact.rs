// debug: does the envelope-conjugated stabilizer fix the codewords?
use gkpsim_core::fock::displacement;
use gkpsim_core::gkp::build_code;
use gkpsim_core::{C64, CMatrix};

fn main() {
    let dim = 60;
    let delta = 0.36f64;
    let code = build_code(delta, dim).unwrap();
    let big_alpha = (2.0 * std::f64::consts::PI).sqrt();
    for (label, dir) in [("S_q", C64::new(0.0, 1.0)), ("S_p", C64::new(1.0, 0.0))] {
        let s = displacement(dir * big_alpha, dim).unwrap();
        let d2 = delta * delta;
        let mut a = s.data().clone();
        for n in 0..dim {
            for m in 0..dim {
                a[(m, n)] *= (d2 * (n as f64 - m as f64)).exp();
            }
        }
        for mu in 0..2 {
            let v = code.codeword(mu);
            let av: nalgebra::DVector<C64> = &a * v;
            let diff = (&av - v).norm();
            let ov = v.dotc(&av);
            println!("{label} |{mu}>: ||A v - v|| = {diff:.4e}, <v|A|v> = {:.6}+{:.2e}i, ||Av|| = {:.6}", ov.re, ov.im, av.norm());
        }
        let m: CMatrix = a.adjoint() * &a;
        let eig = m.symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
        println!("{label}: A^dag A eig range: [{:.3e}, {:.3e}]", vals[0], vals[dim-1]);
    }
}
