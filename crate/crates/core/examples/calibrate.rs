// one-off: search rotation-axis and trim-sign conventions for the sBs round
use gkpsim_core::gkp::build_code;
use gkpsim_core::sbs::calibrate;

fn main() {
    let code = build_code(0.36, 60).unwrap();
    match calibrate(&code) {
        Ok((params, report)) => {
            println!("best convention: {report:?}");
            println!("axes: {:?}", params.axes);
            println!("trim signs: {:?}", params.trim_signs);
        }
        Err(e) => println!("calibration failed:\n{e}"),
    }
}
