//! Oracles shared by the integration tests. Everything here is
//! independent of the library's solvers.
#![allow(dead_code)]

use ferrolayer::full_model::{f_rhs, simulate_full_with_source, CrossTerm, FullModelConfig};
use ferrolayer::geometry::{build_domain, DomainConfig};
use ferrolayer::layer_internal::{graded_y_nodes, march_transmission, HalfLineOperator, SideSeries};
use ferrolayer::strayfield::{slab_stray, MagnetizationField};
use ferrolayer::vec3::{vec3, Vec3};
use std::sync::Arc;

/// Adaptive Runge-Kutta-Fehlberg 4(5) integration of `y' = f(y)` with a
/// mixed absolute/relative error control.
pub fn rkf45(f: impl Fn(&Vec3) -> Vec3, y0: Vec3, t_end: f64, tol: f64) -> Vec3 {
    let (mut t, mut y, mut h) = (0.0f64, y0, 1e-3f64);
    while t < t_end {
        h = h.min(t_end - t);
        let k1 = f(&y) * h;
        let k2 = f(&(y + k1 * (1.0 / 4.0))) * h;
        let k3 = f(&(y + k1 * (3.0 / 32.0) + k2 * (9.0 / 32.0))) * h;
        let k4 = f(&(y + k1 * (1932.0 / 2197.0) - k2 * (7200.0 / 2197.0) + k3 * (7296.0 / 2197.0))) * h;
        let k5 = f(&(y + k1 * (439.0 / 216.0) - k2 * 8.0 + k3 * (3680.0 / 513.0) - k4 * (845.0 / 4104.0))) * h;
        let k6 = f(&(y - k1 * (8.0 / 27.0) + k2 * 2.0 - k3 * (3544.0 / 2565.0) + k4 * (1859.0 / 4104.0)
            - k5 * (11.0 / 40.0)))
            * h;
        let y4 = y + k1 * (25.0 / 216.0) + k3 * (1408.0 / 2565.0) + k4 * (2197.0 / 4104.0) - k5 * (1.0 / 5.0);
        let y5 = y + k1 * (16.0 / 135.0) + k3 * (6656.0 / 12825.0) + k4 * (28561.0 / 56430.0)
            - k5 * (9.0 / 50.0)
            + k6 * (2.0 / 55.0);
        let err = (y5 - y4).amax();
        let scale = tol * (1.0 + y.amax());
        if err <= scale {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 { 4.0 } else { (0.84 * (scale / err).powf(0.25)).clamp(0.1, 4.0) };
        h *= factor;
    }
    y
}

/// Manufactured unit field `c (sin a, cos a, 1/2)` with
/// `a = w t + k sin(pi x / 2)`; its slope vanishes at `x = ±1`.
pub struct Manufactured {
    pub omega: f64,
    pub k: f64,
}

impl Manufactured {
    const C: f64 = 0.894_427_190_999_915_9; // 1 / sqrt(1.25)

    fn phase(&self, t: f64, x: f64) -> (f64, f64, f64) {
        let hp = std::f64::consts::FRAC_PI_2;
        let a = self.omega * t + self.k * (hp * x).sin();
        let a1 = self.k * hp * (hp * x).cos();
        let a2 = -self.k * hp * hp * (hp * x).sin();
        (a, a1, a2)
    }

    pub fn value(&self, t: f64, x: f64) -> Vec3 {
        let (a, _, _) = self.phase(t, x);
        vec3(a.sin(), a.cos(), 0.5) * Self::C
    }

    /// `u_t - e^2 u_xx - e^2 u x u_xx - F(u, e u_x, H(u))` from closed-form
    /// derivatives.
    pub fn source(&self, eps: f64, t: f64, x: f64) -> Vec3 {
        let (a, a1, a2) = self.phase(t, x);
        let c = Self::C;
        let u = vec3(a.sin(), a.cos(), 0.5) * c;
        let rot = vec3(a.cos(), -a.sin(), 0.0) * c;
        let ut = rot * self.omega;
        let ux = rot * a1;
        let uxx = rot * a2 - vec3(a.sin(), a.cos(), 0.0) * (c * a1 * a1);
        let e2 = eps * eps;
        ut - (uxx + u.cross(&uxx)) * e2 - f_rhs(&u, &(ux * eps), &slab_stray(&u))
    }

    /// Max nodal error at `t_end` of the full-model run on `cells` cells per
    /// side.
    pub fn full_model_error(&self, eps: f64, cells: usize, dt: f64, t_end: f64, cross_term: CrossTerm) -> f64 {
        let d = Arc::new(build_domain(DomainConfig::uniform(cells)).unwrap());
        let x = d.merged_nodes();
        let u0 = MagnetizationField::from_fn(d.clone(), 0.0, |_, xx| self.value(0.0, xx));
        let cfg = FullModelConfig { epsilon: eps, dt, t_end, theta: 0.5, cross_term, output_every: usize::MAX };
        let src = |t: f64, i: usize| self.source(eps, t, x[i]);
        let tr = simulate_full_with_source(&u0, &cfg, Some(&src)).unwrap();
        let last = tr.states.last().unwrap().merged();
        last.iter().zip(&x).map(|(v, xx)| (v - self.value(t_end, *xx)).amax()).fold(0.0, f64::max)
    }
}

// Manufactured transmission problem.
// W(t, y) = e^{-y^2} (g(t) + y k(t)) with y signed: continuous value and
// slope across the junction, and a non-symmetric profile.
fn g(t: f64) -> Vec3 {
    vec3(t.cos(), (2.0 * t).sin(), 0.3)
}
fn gd(t: f64) -> Vec3 {
    vec3(-t.sin(), 2.0 * (2.0 * t).cos(), 0.0)
}
fn kk(t: f64) -> Vec3 {
    vec3(0.5, 0.2 * t, -(t).sin())
}
fn kd(t: f64) -> Vec3 {
    vec3(0.0, 0.2, -(t).cos())
}
fn exact(t: f64, y: f64) -> Vec3 {
    (g(t) + kk(t) * y) * (-y * y).exp()
}
fn exact_t(t: f64, y: f64) -> Vec3 {
    (gd(t) + kd(t) * y) * (-y * y).exp()
}
fn exact_yy(t: f64, y: f64) -> Vec3 {
    let e = (-y * y).exp();
    g(t) * ((4.0 * y * y - 2.0) * e) + kk(t) * ((4.0 * y * y * y - 6.0 * y) * e)
}
fn coeff(t: f64, y: f64) -> Vec3 {
    vec3(0.3, 0.2 * t.cos(), 0.4 * (-y * y).exp() + 0.1 * y)
}

pub fn transmission_mms_error(h0: f64, ratio: f64, dt: f64) -> f64 {
    let y = graded_y_nodes(8.0, h0, ratio).unwrap();
    let op = HalfLineOperator::new(&y);
    let t_end = 0.5;
    let steps = (t_end / dt).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect();
    let side_arrays = |f: &dyn Fn(f64, f64) -> Vec3, t: f64| -> [Vec<Vec3>; 2] {
        [y.iter().map(|&s| f(t, -s)).collect(), y.iter().map(|&s| f(t, s)).collect()]
    };
    let coeffs: SideSeries = times.iter().map(|&t| side_arrays(&coeff, t)).collect();
    let forcing: SideSeries = times
        .iter()
        .map(|&t| {
            side_arrays(
                &|t, yy| {
                    let w = exact_yy(t, yy);
                    exact_t(t, yy) - w - coeff(t, yy).cross(&w)
                },
                t,
            )
        })
        .collect();
    let sol = march_transmission(&op, &times, &coeffs, &forcing, side_arrays(&exact, 0.0)).unwrap();
    let mut err = 0.0f64;
    for (it, &t) in times.iter().enumerate() {
        let ex = side_arrays(&exact, t);
        for side in 0..2 {
            for k in 0..y.len() {
                err = err.max((sol[it][side][k] - ex[side][k]).norm());
            }
        }
    }
    err
}
