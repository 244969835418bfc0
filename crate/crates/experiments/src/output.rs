//! Deterministic artifact writers: results CSV, JSON records, SVG heatmaps.
//!
//! The CSV is the artifact of record; identical configs and seeds produce
//! byte-identical files. Floats are written with Rust's shortest
//! round-trip formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gkpsim_core::fock::WignerGrid;

use crate::runners::SweepPoint;
use crate::Result;

pub const RESULTS_CSV_HEADER: &str =
    "delta,gamma,n_rounds,decoder,fidelity,infidelity,success_prob,dim,flags";

pub fn results_csv(points: &[SweepPoint]) -> String {
    let mut out = String::new();
    out.push_str(RESULTS_CSV_HEADER);
    out.push('\n');
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            p.delta,
            p.gamma,
            p.n_rounds,
            p.decoder,
            p.fidelity,
            p.infidelity,
            p.success_prob,
            p.dim,
            p.flags
        )
        .expect("string write");
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// Renders a Wigner grid as a compact SVG heatmap (diverging blue-white-red,
/// symmetric about zero, run-length-encoded rows). Purely a view of the CSV
/// data; nothing is computed here.
pub fn wigner_svg(grid: &WignerGrid) -> String {
    let nq = grid.q.len();
    let np = grid.p.len();
    let vmax = grid.w.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1e-300);
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{nq}" height="{np}" viewBox="0 0 {nq} {np}" shape-rendering="crispEdges">"#
    )
    .unwrap();
    // row 0 at the top = largest p
    for row in 0..np {
        let ip = np - 1 - row;
        let mut col = 0usize;
        while col < nq {
            let c = color(grid.w[ip * nq + col] / vmax);
            let mut run = 1usize;
            while col + run < nq && color(grid.w[ip * nq + col + run] / vmax) == c {
                run += 1;
            }
            writeln!(
                svg,
                r##"<rect x="{col}" y="{row}" width="{run}" height="1" fill="#{:02x}{:02x}{:02x}"/>"##,
                c.0, c.1, c.2
            )
            .unwrap();
            col += run;
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Diverging map: -1 -> blue, 0 -> white, +1 -> red, quantized to 8 bits.
fn color(v: f64) -> (u8, u8, u8) {
    let v = v.clamp(-1.0, 1.0);
    let t = (v.abs() * 255.0).round() as u8;
    if v >= 0.0 {
        (255, 255 - t, 255 - t)
    } else {
        (255 - t, 255 - t, 255)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_schema_and_determinism() {
        let p = SweepPoint {
            delta: 0.25,
            gamma: 1e-3,
            n_rounds: 30,
            decoder: "sbs".into(),
            fidelity: 0.9995,
            infidelity: 5e-4,
            success_prob: 0.9,
            dim: 100,
            flags: "ok".into(),
        };
        let a = results_csv(std::slice::from_ref(&p));
        let b = results_csv(std::slice::from_ref(&p));
        assert_eq!(a, b);
        assert!(a.starts_with(RESULTS_CSV_HEADER));
        assert!(a.contains("0.25,0.001,30,sbs,0.9995,0.0005,0.9,100,ok"));
    }

    #[test]
    fn color_map_endpoints() {
        assert_eq!(color(0.0), (255, 255, 255));
        assert_eq!(color(1.0), (255, 0, 0));
        assert_eq!(color(-1.0), (0, 0, 255));
    }
}
