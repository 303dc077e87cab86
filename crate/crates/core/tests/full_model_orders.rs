mod common;

use common::Manufactured;
use ferrolayer::full_model::CrossTerm;
use ferrolayer::linalg::loglog_slope;

const M: Manufactured = Manufactured { omega: 2.0, k: 1.5 };

#[test]
fn combined_refinement_is_second_order() {
    for cross in [CrossTerm::LaggedImplicit, CrossTerm::Explicit] {
        let cells = [16, 32, 64];
        // the explicit skew term needs dt ~ h^2 / e^2; the lagged form does not
        let dt = |n: usize| match cross {
            CrossTerm::LaggedImplicit => 0.4 / n as f64,
            CrossTerm::Explicit => 0.25 / (n * n) as f64,
        };
        let errs: Vec<f64> = cells.iter().map(|&n| M.full_model_error(0.5, n, dt(n), 0.4, cross)).collect();
        let hs: Vec<f64> = cells.iter().map(|&n| 1.0 / n as f64).collect();
        let slope = loglog_slope(&hs, &errs);
        println!("{cross:?}: errors {errs:?} slope {slope:.3}");
        assert!(slope >= 1.8);
    }
}

#[test]
fn time_order_is_two() {
    // fine grid so the spatial error stays well below the temporal one
    let dts = [0.04, 0.02, 0.01];
    let errs: Vec<f64> =
        dts.iter().map(|&dt| M.full_model_error(0.5, 512, dt, 0.4, CrossTerm::LaggedImplicit)).collect();
    let slope = loglog_slope(&dts, &errs);
    println!("time errors {errs:?} slope {slope:.3}");
    assert!(slope >= 1.8);
}

#[test]
fn space_order_is_two() {
    let cells = [8, 16, 32];
    let errs: Vec<f64> =
        cells.iter().map(|&n| M.full_model_error(0.5, n, 5e-4, 0.4, CrossTerm::LaggedImplicit)).collect();
    let hs: Vec<f64> = cells.iter().map(|&n| 1.0 / n as f64).collect();
    let slope = loglog_slope(&hs, &errs);
    println!("space errors {errs:?} slope {slope:.3}");
    assert!(slope >= 1.8);
}
