//! Finite-difference weights and Lagrange interpolation on non-uniform nodes.

/// Fornberg weights for the derivatives `0..=max_order` at `x0` from the
/// nodes `xs`. Row `k` of the result holds the weights of the k-th derivative.
pub fn fd_weights(x0: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let m = max_order;
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Index `i` such that `xs[i] <= x <= xs[i+1]`, clamped to the grid.
pub fn bracket(xs: &[f64], x: f64) -> usize {
    let n = xs.len();
    if n < 2 || x <= xs[0] {
        return 0;
    }
    if x >= xs[n - 1] {
        return n - 2;
    }
    match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(n - 2),
        Err(i) => i - 1,
    }
}

/// Start index and weights of a four-point Lagrange interpolant at `x`
/// (fewer points on short grids). Nodes must be increasing.
pub fn lagrange4(xs: &[f64], x: f64) -> (usize, [f64; 4], usize) {
    let n = xs.len();
    let npts = n.min(4);
    let i = bracket(xs, x);
    let start = if npts < 4 { 0 } else { i.saturating_sub(1).min(n - 4) };
    let mut w = [0.0; 4];
    for a in 0..npts {
        let xa = xs[start + a];
        let mut l = 1.0;
        for b in 0..npts {
            if a != b {
                let xb = xs[start + b];
                l *= (x - xb) / (xa - xb);
            }
        }
        w[a] = l;
    }
    (start, w, npts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_central_second_derivative() {
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[2][0] - 1.0).abs() < 1e-14);
        assert!((w[2][1] + 2.0).abs() < 1e-14);
        assert!((w[2][2] - 1.0).abs() < 1e-14);
        assert!((w[1][0] + 0.5).abs() < 1e-14);
        assert!(w[1][1].abs() < 1e-14);
    }

    #[test]
    fn fornberg_one_sided_first_derivative() {
        let w = fd_weights(0.0, &[0.0, 1.0, 2.0], 1);
        assert!((w[1][0] + 1.5).abs() < 1e-14);
        assert!((w[1][1] - 2.0).abs() < 1e-14);
        assert!((w[1][2] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn lagrange_reproduces_cubics() {
        let xs = [0.0, 0.1, 0.25, 0.5, 0.8, 1.3];
        let f = |x: f64| 2.0 - x + 3.0 * x * x - 0.5 * x * x * x;
        let v: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        for &x in &[0.0, 0.05, 0.33, 0.79, 1.3] {
            let (s, w, n) = lagrange4(&xs, x);
            let p: f64 = (0..n).map(|a| w[a] * v[s + a]).sum();
            assert!((p - f(x)).abs() < 1e-12, "x={x}");
        }
    }
}
