//! Boundary layer at the outer faces.
//!
//! The profile `B(t, x, z)`, `z = phi(x) / e`, solves for every slow point
//! near the boundary the linear problem
//!
//! ```text
//! B_t - B_zz - u0 x B_zz = B x h - (B.n) u0 x n - B x (u0 x h) - u0 x (B x h) + (B.n) u0 x (u0 x n)
//! B_z(0) = theta(x) dn u0,   B(0) = 0,
//! ```
//!
//! with `h = H(u0)` and `n` the outward normal. It absorbs the normal
//! derivative of `u0` that the limit dynamics ignores. The corrector `rho`
//! then cancels the slow-parameter normal derivative of `B` at the boundary.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interp::{fd_weights, lagrange4};
use crate::layer_internal::{graded_time_nodes, graded_y_nodes, HalfLineOperator, ProfileGridConfig};
use crate::limit_model::LimitTrajectory;
use crate::linalg::BlockTridiagonal;
use crate::geometry::LevelSets;
use crate::strayfield::slab_stray;
use crate::vec3::{cross_matrix, Mat3, Vec3};

/// Leading time steps taken with backward Euler.
pub const DAMPED_STEPS: usize = 4;

/// `B -> ` right side of the boundary-layer equation, as a matrix.
pub fn boundary_linearization(u0: &Vec3, n: &Vec3) -> Mat3 {
    let h = slab_stray(u0);
    let apply = |b: &Vec3| -> Vec3 {
        let bn = b.dot(n);
        b.cross(&h) - u0.cross(n) * bn - b.cross(&u0.cross(&h)) - u0.cross(&b.cross(&h)) + u0.cross(&u0.cross(n)) * bn
    };
    Mat3::from_columns(&[apply(&Vec3::x()), apply(&Vec3::y()), apply(&Vec3::z())])
}

/// Crank-Nicolson march of one boundary-layer line. `u0[it]` is the
/// coefficient and `data[it]` the Neumann datum at `z = 0`; the start
/// value is zero and `B = 0` at the last node.
pub fn solve_boundary_line(z: &[f64], times: &[f64], u0: &[Vec3], data: &[Vec3], normal: &Vec3) -> Result<Vec<Vec<Vec3>>> {
    let n = z.len();
    if n < 4 {
        return Err(Error::InvalidArgument("boundary-layer grid needs at least three cells".into()));
    }
    if u0.len() != times.len() || data.len() != times.len() {
        return Err(Error::GridMismatch("boundary-layer coefficients do not match the time nodes".into()));
    }
    let op = HalfLineOperator::new(z);
    let h1 = z[1];
    let id = Mat3::identity();
    let m = n - 1;
    // discrete (M lap + L) U plus the ghost-node data term, at level it
    let apply = |it: usize, w: &[Vec3]| -> Vec<Vec3> {
        let mm = id + cross_matrix(&u0[it]);
        let lin = boundary_linearization(&u0[it], normal);
        (0..m)
            .map(|k| {
                let lap = if k == 0 { (w[1] - w[0] - data[it] * h1) * (2.0 / (h1 * h1)) } else { op.lap_at(w, k) };
                mm * lap + lin * w[k]
            })
            .collect()
    };
    let mut out = vec![vec![Vec3::zeros(); n]];
    for it in 1..times.len() {
        let dt = times[it] - times[it - 1];
        // backward Euler on the first steps damps the start-up mismatch
        // between zero data and the Neumann datum
        let th = if it <= DAMPED_STEPS { 1.0 } else { 0.5 };
        let prev = &out[it - 1];
        let explicit = apply(it - 1, prev);
        let mm = id + cross_matrix(&u0[it]);
        let lin = boundary_linearization(&u0[it], normal);
        let mut sys = BlockTridiagonal::zeros(m);
        let mut rhs = vec![Vec3::zeros(); m];
        for k in 0..m {
            let [a, b, c] = if k == 0 { [0.0, -2.0 / (h1 * h1), 2.0 / (h1 * h1)] } else { op.lap[k] };
            if k > 0 {
                sys.lower[k] = mm * (-th * dt * a);
            }
            sys.diag[k] = id - (mm * b + lin) * (th * dt);
            if k + 1 < m {
                sys.upper[k] = mm * (-th * dt * c);
            }
            rhs[k] = prev[k] + explicit[k] * ((1.0 - th) * dt);
        }
        // new-level ghost datum
        rhs[0] -= mm * data[it] * (2.0 * th * dt / h1);
        sys.solve(&mut rhs)?;
        let mut next = rhs;
        next.push(Vec3::zeros());
        out.push(next);
    }
    Ok(out)
}

/// Boundary-layer profile on the slow nodes of `V_Gamma` and the Neumann
/// corrector.
#[derive(Debug, Clone)]
pub struct BoundaryProfile {
    pub z: Vec<f64>,
    pub t_nodes: Vec<f64>,
    /// Slow nodes, increasing; the left group sits near `x = -1`, the right
    /// group near `x = 1`.
    pub x_nodes: Vec<f64>,
    /// `[it][ix][k]`.
    pub values: Vec<Vec<Vec<Vec3>>>,
    /// Required outward normal derivative of `rho` at `x = -1` and `x = 1`,
    /// per time node: `-dn B(t, x, 0)`.
    pub rho_slope: [Vec<Vec3>; 2],
    pub level_sets: LevelSets,
}

impl BoundaryProfile {
    pub fn z_max(&self) -> f64 {
        *self.z.last().unwrap()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().flatten().map(|v| v.amax()).fold(0.0, f64::max)
    }

    pub fn tail(&self) -> f64 {
        let last = self.z.len() - 1;
        self.values.iter().flatten().map(|line| line[last].norm()).fold(0.0, f64::max)
    }

    fn group(&self, x: f64) -> Option<&[f64]> {
        let mid = self.x_nodes.partition_point(|&v| v < 0.0);
        let (left, right) = self.x_nodes.split_at(mid);
        let g = if x < 0.0 { left } else { right };
        if g.is_empty() || x < g[0] || x > *g.last().unwrap() {
            None
        } else {
            Some(g)
        }
    }

    /// `B(t, x, z)` by four-point interpolation; zero outside the stored
    /// slow nodes and beyond the truncation.
    pub fn sample(&self, t: f64, x: f64, z: f64) -> Vec3 {
        if !(0.0..=self.z_max()).contains(&z) {
            return Vec3::zeros();
        }
        let Some(g) = self.group(x) else {
            return Vec3::zeros();
        };
        let offset = if x < 0.0 { 0 } else { self.x_nodes.len() - g.len() };
        let (t0, wt, nt) = lagrange4(&self.t_nodes, t);
        let (x0, wx, nx) = lagrange4(g, x);
        let (z0, wz, nz) = lagrange4(&self.z, z);
        let mut acc = Vec3::zeros();
        for a in 0..nt {
            for b in 0..nx {
                let line = &self.values[t0 + a][offset + x0 + b];
                let inner: Vec3 = (0..nz).map(|c| line[z0 + c] * wz[c]).sum();
                acc += inner * (wt[a] * wx[b]);
            }
        }
        acc
    }

    /// `rho(t, x) = -s(t) phi(x) theta(x)` with `s` the required normal
    /// slope at the nearer boundary point, so that `dn rho = s` there.
    pub fn rho(&self, t: f64, x: f64) -> Vec3 {
        let cut = self.level_sets.theta(x);
        if cut == 0.0 {
            return Vec3::zeros();
        }
        let side = usize::from(x >= 0.0);
        let (t0, wt, nt) = lagrange4(&self.t_nodes, t);
        let s: Vec3 = (0..nt).map(|a| self.rho_slope[side][t0 + a] * wt[a]).sum();
        -s * (self.level_sets.phi(x) * cut)
    }
}

/// Normal derivative `n . d/dx` of a merged-node field at node `i`,
/// four-point one-sided-or-centred stencil.
fn normal_derivative(x: &[f64], values: &[Vec3], i: usize, normal: f64) -> Vec3 {
    let n = x.len();
    let start = i.saturating_sub(2).min(n - 4);
    let w = fd_weights(x[i], &x[start..start + 4], 1);
    // differences against the centre node, exact zero on constant data
    let d: Vec3 = (0..4).map(|q| (values[start + q] - values[i]) * w[1][q]).sum();
    d * normal
}

/// Solves the boundary layer on every limit-grid node with `theta > 0`.
/// The fast grid and time nodes follow `grid_cfg` (its `y_max` is the
/// truncation `Z`).
pub fn solve_boundary_profile(u0: &LimitTrajectory, grid_cfg: &ProfileGridConfig) -> Result<BoundaryProfile> {
    let z = graded_y_nodes(grid_cfg.y_max, grid_cfg.h0, grid_cfg.ratio)?;
    let t_nodes = graded_time_nodes(grid_cfg.dt, grid_cfg.t_end)?;
    if *t_nodes.last().unwrap() > u0.horizon() + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "boundary-layer horizon {} exceeds the limit trajectory horizon {}",
            grid_cfg.t_end,
            u0.horizon()
        )));
    }
    let domain = Arc::clone(&u0.states[0].domain);
    let ls = domain.level_sets.clone();
    let merged_x = domain.merged_nodes();
    let states: Vec<Vec<Vec3>> = t_nodes.iter().map(|&t| u0.sample(t).merged()).collect();
    let selected: Vec<usize> = (0..merged_x.len()).filter(|&i| ls.theta(merged_x[i]) > 0.0).collect();
    let x_nodes: Vec<f64> = selected.iter().map(|&i| merged_x[i]).collect();

    let lines: Vec<Vec<Vec<Vec3>>> = selected
        .par_iter()
        .map(|&i| {
            let x = merged_x[i];
            let nrm = ls.boundary_normal(x);
            let normal = Vec3::x() * nrm;
            let coeff: Vec<Vec3> = states.iter().map(|s| s[i]).collect();
            let data: Vec<Vec3> =
                states.iter().map(|s| normal_derivative(&merged_x, s, i, nrm) * ls.theta(x)).collect();
            if data.iter().all(|d| d.amax() == 0.0) {
                return Ok(vec![vec![Vec3::zeros(); z.len()]; t_nodes.len()]);
            }
            solve_boundary_line(&z, &t_nodes, &coeff, &data, &normal)
        })
        .collect::<Result<_>>()?;

    // values[it][ix]
    let values: Vec<Vec<Vec<Vec3>>> =
        (0..t_nodes.len()).map(|it| lines.iter().map(|line| line[it].clone()).collect()).collect();

    let mut rho_slope = [vec![Vec3::zeros(); t_nodes.len()], vec![Vec3::zeros(); t_nodes.len()]];
    let mid = x_nodes.partition_point(|&v| v < 0.0);
    for (side, range) in [(0usize, 0..mid), (1usize, mid..x_nodes.len())] {
        if range.len() < 4 {
            continue;
        }
        let xs = &x_nodes[range.clone()];
        let nrm = if side == 0 { -1.0 } else { 1.0 };
        let bi = if side == 0 { 0 } else { xs.len() - 1 };
        for it in 0..t_nodes.len() {
            let at_zero: Vec<Vec3> = range.clone().map(|ix| values[it][ix][0]).collect();
            rho_slope[side][it] = -normal_derivative(xs, &at_zero, bi, nrm);
        }
    }
    Ok(BoundaryProfile { z, t_nodes, x_nodes, values, rho_slope, level_sets: ls })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainConfig, Side};
    use crate::limit_model::integrate_limit;
    use crate::strayfield::MagnetizationField;
    use crate::vec3::vec3;

    fn grid() -> ProfileGridConfig {
        ProfileGridConfig { y_max: 15.0, h0: 0.01, ratio: 1.03, dt: 0.01, t_end: 0.2 }
    }

    #[test]
    fn linearization_matches_f_pm() {
        use crate::layer_internal::f_pm;
        let u0 = vec3(0.3, -0.5, 0.8).normalize();
        let n = Vec3::x();
        let m = boundary_linearization(&u0, &n);
        let b = vec3(1e-7, -2e-7, 3e-7);
        let fd = f_pm(&b, &Vec3::zeros(), &u0, &slab_stray(&u0), &n);
        assert!((m * b - fd).norm() < 1e-12);
    }

    #[test]
    fn constant_data_gives_zero_layer() {
        let d = Arc::new(build_domain(DomainConfig::uniform(16)).unwrap());
        let u = MagnetizationField::from_fn(d, 0.0, |s, _| match s {
            Side::Minus => vec3(0.6, 0.8, 0.0),
            Side::Plus => vec3(-0.6, 0.8, 0.0),
        });
        let tr = integrate_limit(&u, 0.2, 1e-3).unwrap();
        let b = solve_boundary_profile(&tr, &grid()).unwrap();
        assert_eq!(b.max_abs(), 0.0);
        assert_eq!(b.rho(0.1, 0.95), Vec3::zeros());
    }

    #[test]
    fn sloped_data_gives_decaying_layer() {
        let d = Arc::new(build_domain(DomainConfig::uniform(32)).unwrap());
        let u = MagnetizationField::from_fn(d, 0.0, |_, x| vec3(0.6 + 0.3 * x, 0.8, 0.2 * x * x).normalize());
        let tr = integrate_limit(&u, 0.2, 1e-3).unwrap();
        let b = solve_boundary_profile(&tr, &grid()).unwrap();
        assert!(b.max_abs() > 1e-3);
        assert!(b.tail() <= 1e-6, "tail {}", b.tail());
        // support and the Neumann datum at z = 0
        assert_eq!(b.sample(0.1, 0.5, 0.0), Vec3::zeros());
        assert_eq!(b.rho(0.1, 0.5), Vec3::zeros());
    }

    #[test]
    fn frozen_problem_is_linear() {
        let z = graded_y_nodes(15.0, 0.01, 1.03).unwrap();
        let t = graded_time_nodes(0.01, 0.1).unwrap();
        let u0 = vec![vec3(0.6, 0.8, 0.0); t.len()];
        let g: Vec<Vec3> = t.iter().map(|s| vec3(0.1, -0.2, 0.3) * (1.0 + s)).collect();
        let g2: Vec<Vec3> = g.iter().map(|v| v * 2.0).collect();
        let a = solve_boundary_line(&z, &t, &u0, &g, &Vec3::x()).unwrap();
        let b = solve_boundary_line(&z, &t, &u0, &g2, &Vec3::x()).unwrap();
        for (p, q) in a.iter().flatten().zip(b.iter().flatten()) {
            assert!((q - p * 2.0).norm() < 1e-12);
        }
    }

    #[test]
    fn heat_limit_matches_neumann_series() {
        // with h = 0 and data along u0 every cross term drops and B solves
        // a scalar heat problem with a constant flux
        let z = graded_y_nodes(15.0, 0.005, 1.02).unwrap();
        let t = graded_time_nodes(0.01, 0.2).unwrap();
        let u0 = vec![vec3(0.0, 1.0, 0.0); t.len()];
        let g = vec![vec3(0.0, 0.5, 0.0); t.len()];
        let b = solve_boundary_line(&z, &t, &u0, &g, &Vec3::x()).unwrap();
        let last = b.last().unwrap();
        let w = fd_weights(0.0, &z[..4], 1);
        let slope: Vec3 = (0..4).map(|q| last[q] * w[1][q]).sum();
        assert!((slope - g[0]).norm() < 1e-3, "slope {slope:?}");
        // scalar heat with Neumann flux: B(0, t) = -2 g sqrt(t / pi)
        let expect = -2.0 * 0.5 * (0.2f64 / std::f64::consts::PI).sqrt();
        assert!((last[0].y - expect).abs() < 2e-3, "{} vs {expect}", last[0].y);
    }
}
