//! The zero-exchange system: a pointwise ODE on the sphere coupled through
//! the stray field, with no boundary condition and a jump across the
//! interface that is carried, never smoothed.

use crate::error::{Error, Result};
use crate::interp::bracket;
use crate::strayfield::{slab_stray, stray_field_1d, MagnetizationField, StrayField, TOL_UNIT};
use crate::vec3::{normalize_or_keep, Vec3};

/// Largest admissible pre-renormalization drift of `|u|` in a single step.
pub const MAX_STEP_DRIFT: f64 = 1e-3;

/// `u x H - u x (u x H)`.
#[inline]
pub fn rhs_limit(u: &Vec3, h: &Vec3) -> Vec3 {
    let uh = u.cross(h);
    uh - u.cross(&uh)
}

/// Time derivative of a whole field under the limit dynamics.
pub fn field_rate(u: &MagnetizationField, field: &impl Fn(&MagnetizationField) -> StrayField) -> MagnetizationField {
    let h = field(u);
    u.zip_map(&h, rhs_limit)
}

/// Pointwise slab rate, `rhs_limit(u, H(u))`.
#[inline]
pub fn slab_rate(u: &Vec3) -> Vec3 {
    rhs_limit(u, &slab_stray(u))
}

#[derive(Debug, Clone)]
pub struct LimitTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<MagnetizationField>,
    /// Largest pre-renormalization `| |u| - 1 |` over all steps.
    pub norm_drift: f64,
}

impl LimitTrajectory {
    pub fn final_state(&self) -> &MagnetizationField {
        self.states.last().unwrap()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// State at time `t` by cubic Hermite interpolation between stored
    /// steps, using the exact slab rate as the derivative.
    pub fn sample(&self, t: f64) -> MagnetizationField {
        let i = bracket(&self.times, t);
        if self.times.len() == 1 {
            return self.states[0].clone();
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = ((t - t0) / h).clamp(0.0, 1.0);
        if s == 0.0 {
            return self.states[i].clone();
        }
        if s == 1.0 {
            return self.states[i + 1].clone();
        }
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let a = &self.states[i];
        let b = &self.states[i + 1];
        let mut out = a.zip_map(b, |p, q| p * h00 + slab_rate(p) * (h10 * h) + q * h01 + slab_rate(q) * (h11 * h));
        out.time = t;
        out
    }

    /// Interface jump `u(0+) - u(0-)` at every stored time.
    pub fn jumps(&self) -> Vec<Vec3> {
        self.states.iter().map(|s| s.interface_jump()).collect()
    }
}

fn check_on_sphere(u: &MagnetizationField) -> Result<()> {
    let d = u.max_norm_defect();
    if d > TOL_UNIT {
        return Err(Error::InvalidArgument(format!("initial field is off the unit sphere by {d:.3e}")));
    }
    Ok(())
}

fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon {t_end} must be non-negative")));
    }
    Ok((t_end / dt - 1e-9).ceil().max(0.0) as usize)
}

fn renormalize(u: &mut MagnetizationField) -> f64 {
    let drift = u.max_norm_defect();
    for v in u.values_minus.iter_mut().chain(u.values_plus.iter_mut()) {
        *v = normalize_or_keep(v);
    }
    drift
}

/// One classical Runge-Kutta step followed by projection to the sphere.
/// Returns the new state and the drift before projection.
pub fn rk4_step(
    u: &MagnetizationField,
    dt: f64,
    field: &impl Fn(&MagnetizationField) -> StrayField,
) -> (MagnetizationField, f64) {
    let k1 = field_rate(u, field);
    let stage = |k: &MagnetizationField, c: f64| u.zip_map(k, |a, b| a + b * c);
    let k2 = field_rate(&stage(&k1, 0.5 * dt), field);
    let k3 = field_rate(&stage(&k2, 0.5 * dt), field);
    let k4 = field_rate(&stage(&k3, dt), field);
    let mut next = u.clone();
    let sides = [
        (&mut next.values_minus, &k1.values_minus, &k2.values_minus, &k3.values_minus, &k4.values_minus),
        (&mut next.values_plus, &k1.values_plus, &k2.values_plus, &k3.values_plus, &k4.values_plus),
    ];
    for (v, a, b, c, d) in sides {
        for i in 0..v.len() {
            v[i] += (a[i] + b[i] * 2.0 + c[i] * 2.0 + d[i]) * (dt / 6.0);
        }
    }
    next.time = u.time + dt;
    let drift = renormalize(&mut next);
    (next, drift)
}

/// One Heun (explicit trapezoid) step of the slab limit dynamics with
/// projection; this is what the full-model step reduces to at zero
/// exchange.
pub fn heun_step(u: &MagnetizationField, dt: f64) -> (MagnetizationField, f64) {
    let field = stray_field_1d;
    let k1 = field_rate(u, &field);
    let pred = u.zip_map(&k1, |a, b| a + b * dt);
    let k2 = field_rate(&pred, &field);
    let mut next = u.clone();
    for (v, (a, b)) in next.values_minus.iter_mut().zip(k1.values_minus.iter().zip(&k2.values_minus)) {
        *v += (a + b) * (0.5 * dt);
    }
    for (v, (a, b)) in next.values_plus.iter_mut().zip(k1.values_plus.iter().zip(&k2.values_plus)) {
        *v += (a + b) * (0.5 * dt);
    }
    next.time = u.time + dt;
    let drift = renormalize(&mut next);
    (next, drift)
}

/// RK4 integration of the slab limit model on `[u_init.time, u_init.time + t_end]`.
pub fn integrate_limit(u_init: &MagnetizationField, t_end: f64, dt: f64) -> Result<LimitTrajectory> {
    integrate_limit_with(u_init, t_end, dt, &stray_field_1d)
}

/// As [`integrate_limit`] with a caller-supplied stray-field operator.
pub fn integrate_limit_with(
    u_init: &MagnetizationField,
    t_end: f64,
    dt: f64,
    field: &impl Fn(&MagnetizationField) -> StrayField,
) -> Result<LimitTrajectory> {
    check_on_sphere(u_init)?;
    let steps = step_count(t_end, dt)?;
    let t0 = u_init.time;
    let mut times = vec![t0];
    let mut states = vec![u_init.clone()];
    let mut norm_drift: f64 = 0.0;
    let mut u = u_init.clone();
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let h = (t0 + t_end - t).min(dt);
        let (next, drift) = rk4_step(&u, h, field);
        if drift > MAX_STEP_DRIFT {
            return Err(Error::NormDrift { drift, limit: MAX_STEP_DRIFT, time: t });
        }
        norm_drift = norm_drift.max(drift);
        u = next;
        u.time = if k + 1 == steps { t0 + t_end } else { t + h };
        times.push(u.time);
        states.push(u.clone());
    }
    Ok(LimitTrajectory { times, states, norm_drift })
}

/// First component of the slab limit solution started from a unit vector
/// with first component `u1_0`: `u1^2 = v e^{-2t} / (1 - v + v e^{-2t})`.
pub fn closed_form_u1(u1_0: f64, t: f64) -> f64 {
    let v = u1_0 * u1_0;
    let e = (-2.0 * t).exp();
    u1_0.signum() * (v * e / (1.0 - v + v * e)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainConfig, Side};
    use crate::linalg::loglog_slope;
    use crate::vec3::vec3;
    use std::sync::Arc;

    fn domain() -> Arc<crate::geometry::SlabDomain> {
        Arc::new(build_domain(DomainConfig::uniform(8)).unwrap())
    }

    fn jump_field() -> MagnetizationField {
        MagnetizationField::from_fn(domain(), 0.0, |s, _| match s {
            Side::Minus => vec3(0.6, 0.8, 0.0),
            Side::Plus => vec3(-0.6, 0.8, 0.0),
        })
    }

    #[test]
    fn rhs_examples() {
        assert_eq!(rhs_limit(&vec3(0.0, 1.0, 0.0), &Vec3::zeros()), Vec3::zeros());
        assert_eq!(rhs_limit(&vec3(0.0, 1.0, 0.0), &vec3(1.0, 0.0, 0.0)), vec3(1.0, 0.0, -1.0));
        assert_eq!(rhs_limit(&vec3(1.0, 0.0, 0.0), &vec3(-1.0, 0.0, 0.0)), Vec3::zeros());
    }

    #[test]
    fn equilibrium_is_constant() {
        let u = MagnetizationField::constant(domain(), vec3(0.0, 1.0, 0.0));
        let tr = integrate_limit(&u, 1.0, 0.1).unwrap();
        assert_eq!(tr.times.len(), 11);
        assert!(tr.final_state().iter().all(|v| *v == vec3(0.0, 1.0, 0.0)));
    }

    #[test]
    fn jump_decays_by_closed_form() {
        let tr = integrate_limit(&jump_field(), 1.0, 1e-3).unwrap();
        let exact = closed_form_u1(0.6, 1.0);
        assert!((exact - 0.26598).abs() < 1e-5);
        let u = tr.final_state();
        assert!(u.values_minus.iter().all(|v| (v.x - exact).abs() < 1e-10));
        assert!(u.values_plus.iter().all(|v| (v.x + exact).abs() < 1e-10));
        for (t, j) in tr.times.iter().zip(tr.jumps()) {
            assert!(j.norm() >= 2.0 * closed_form_u1(0.6, *t) - 1e-10);
        }
    }

    #[test]
    fn rk4_order_four() {
        let dts = [1e-2, 5e-3, 2.5e-3];
        let errs: Vec<f64> = dts
            .iter()
            .map(|&dt| {
                let tr = integrate_limit(&jump_field(), 1.0, dt).unwrap();
                (tr.final_state().values_minus[0].x - closed_form_u1(0.6, 1.0)).abs()
            })
            .collect();
        let slope = loglog_slope(&dts, &errs);
        assert!(slope >= 3.7, "slope {slope}, errors {errs:?}");
    }

    #[test]
    fn hermite_sampling_is_accurate() {
        let tr = integrate_limit(&jump_field(), 1.0, 1e-2).unwrap();
        let s = tr.sample(0.4567);
        assert!((s.values_minus[3].x - closed_form_u1(0.6, 0.4567)).abs() < 1e-8);
        assert_eq!(tr.sample(0.0).values_plus, tr.states[0].values_plus);
    }

    #[test]
    fn off_sphere_and_large_steps_rejected() {
        let u = MagnetizationField::constant(domain(), vec3(0.6, 0.0, 0.0));
        assert!(integrate_limit(&u, 1.0, 0.1).is_err());
        assert!(matches!(integrate_limit(&jump_field(), 5.0, 2.0), Err(Error::NormDrift { .. })));
        assert!(integrate_limit(&jump_field(), 1.0, 0.0).is_err());
    }

    #[test]
    fn sphere_tangency() {
        let mut x: u64 = 12345;
        let mut rnd = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..1000 {
            let u = vec3(rnd(), rnd(), rnd()).normalize();
            let h = vec3(rnd(), rnd(), rnd()) * 3.0;
            assert!(rhs_limit(&u, &h).dot(&u).abs() < 1e-14);
        }
    }
}
