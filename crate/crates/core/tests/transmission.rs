mod common;

use common::transmission_mms_error;
use ferrolayer::linalg::loglog_slope;

#[test]
fn transmission_march_is_second_order() {
    let mut params = Vec::new();
    let mut errors = Vec::new();
    let (mut h0, mut r, mut dt) = (0.04, 1.04f64, 0.02);
    for _ in 0..3 {
        let e = transmission_mms_error(h0, r, dt);
        println!("h0 = {h0:.4}, ratio = {r:.5}, dt = {dt:.4}: max error {e:.3e}");
        params.push(h0);
        errors.push(e);
        h0 /= 2.0;
        r = r.sqrt();
        dt /= 2.0;
    }
    let slope = loglog_slope(&params, &errors);
    println!("combined slope {slope:.3}");
    assert!(slope >= 1.8, "slope {slope}");
}

#[test]
fn transmission_time_and_space_orders() {
    let fine = (0.005, 1.005f64.sqrt());
    let et: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&dt| transmission_mms_error(fine.0, fine.1, dt)).collect();
    let st = loglog_slope(&[0.04, 0.02, 0.01], &et);
    println!("time errors {et:?}, slope {st:.3}");
    assert!(st >= 1.8, "time slope {st}");
    let hs = [(0.08, 1.08f64), (0.04, 1.08f64.sqrt()), (0.02, 1.08f64.sqrt().sqrt())];
    let es: Vec<f64> = hs.iter().map(|&(h, r)| transmission_mms_error(h, r, 1e-3)).collect();
    let ss = loglog_slope(&[0.08, 0.04, 0.02], &es);
    println!("space errors {es:?}, slope {ss:.3}");
    assert!(ss >= 1.8, "space slope {ss}");
}
