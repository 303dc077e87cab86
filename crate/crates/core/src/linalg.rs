//! Banded solvers used by the implicit steps.

use crate::error::{Error, Result};
use crate::vec3::{Mat3, Vec3};

/// Scalar tridiagonal solve (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::GridMismatch("tridiagonal bands of unequal length".into()));
    }
    if n == 0 {
        return Ok(());
    }
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    if beta.abs() < f64::MIN_POSITIVE {
        return Err(Error::SingularSystem { row: 0, detail: "zero pivot".into() });
    }
    c[0] = upper[0] / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        if beta.abs() < f64::MIN_POSITIVE || !beta.is_finite() {
            return Err(Error::SingularSystem { row: i, detail: format!("pivot {beta:e}") });
        }
        c[i] = upper[i] / beta;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

/// Block tridiagonal system with 3x3 blocks:
/// `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
#[derive(Debug, Clone)]
pub struct BlockTridiagonal {
    pub lower: Vec<Mat3>,
    pub diag: Vec<Mat3>,
    pub upper: Vec<Mat3>,
}

impl BlockTridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![Mat3::zeros(); n],
            diag: vec![Mat3::zeros(); n],
            upper: vec![Mat3::zeros(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[Vec3]) -> Vec<Vec3> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut r = self.diag[i] * x[i];
                if i > 0 {
                    r += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    r += self.upper[i] * x[i + 1];
                }
                r
            })
            .collect()
    }

    /// Block Thomas elimination, in place on `rhs`.
    pub fn solve(&self, rhs: &mut [Vec3]) -> Result<()> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::GridMismatch(format!("rhs has {} blocks, system {}", rhs.len(), n)));
        }
        if n == 0 {
            return Ok(());
        }
        let mut c: Vec<Mat3> = Vec::with_capacity(n);
        let inv = |m: &Mat3, row: usize| -> Result<Mat3> {
            m.try_inverse().ok_or_else(|| Error::SingularSystem {
                row,
                detail: format!("singular diagonal block, det = {:e}", m.determinant()),
            })
        };
        let b0 = inv(&self.diag[0], 0)?;
        c.push(b0 * self.upper[0]);
        rhs[0] = b0 * rhs[0];
        for i in 1..n {
            let pivot = self.diag[i] - self.lower[i] * c[i - 1];
            let p = inv(&pivot, i)?;
            c.push(p * self.upper[i]);
            let r = rhs[i] - self.lower[i] * rhs[i - 1];
            rhs[i] = p * r;
        }
        for i in (0..n - 1).rev() {
            let next = rhs[i + 1];
            rhs[i] -= c[i] * next;
        }
        if rhs.iter().any(|v| !v.iter().all(|x| x.is_finite())) {
            return Err(Error::SingularSystem { row: n, detail: "non-finite solution".into() });
        }
        Ok(())
    }
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `log(values)` against `log(params)`.
pub fn loglog_slope(params: &[f64], values: &[f64]) -> f64 {
    let lx: Vec<f64> = params.iter().map(|p| p.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::{cross_matrix, vec3};

    #[test]
    fn thomas_solves_poisson_row() {
        let n = 6;
        let lower = vec![-1.0; n];
        let diag = vec![2.0; n];
        let upper = vec![-1.0; n];
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|i| {
                let mut r = 2.0 * x[i];
                if i > 0 {
                    r -= x[i - 1];
                }
                if i + 1 < n {
                    r -= x[i + 1];
                }
                r
            })
            .collect();
        solve_tridiagonal(&lower, &diag, &upper, &mut b).unwrap();
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn block_thomas_round_trip() {
        let n = 9;
        let mut sys = BlockTridiagonal::zeros(n);
        for i in 0..n {
            let a = vec3(0.1 * i as f64, -0.3, 0.5);
            sys.diag[i] = Mat3::identity() * 4.0 + cross_matrix(&a);
            sys.lower[i] = -Mat3::identity() + 0.2 * cross_matrix(&vec3(0.0, 1.0, 0.0));
            sys.upper[i] = -Mat3::identity();
        }
        let x: Vec<Vec3> = (0..n).map(|i| vec3(i as f64, (i as f64).cos(), -1.0)).collect();
        let mut b = sys.apply(&x);
        sys.solve(&mut b).unwrap();
        for i in 0..n {
            assert!((b[i] - x[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_block_is_reported() {
        let sys = BlockTridiagonal::zeros(3);
        let mut b = vec![Vec3::zeros(); 3];
        assert!(matches!(sys.solve(&mut b), Err(Error::SingularSystem { row: 0, .. })));
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let p = [0.1, 0.05, 0.025];
        let v: Vec<f64> = p.iter().map(|e: &f64| 3.0 * e.sqrt()).collect();
        assert!((loglog_slope(&p, &v) - 0.5).abs() < 1e-12);
    }
}
