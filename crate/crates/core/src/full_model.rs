//! The exchange problem in its equivalent form
//! `u_t = e^2 u_xx + e^2 u x u_xx + F(u, e u_x, H(u))` with homogeneous
//! Neumann data, discretized by an IMEX predictor-corrector on a
//! single-valued nodal grid.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::SlabDomain;
use crate::limit_model::MAX_STEP_DRIFT;
use crate::linalg::{solve_tridiagonal, BlockTridiagonal};
use crate::strayfield::{slab_stray, MagnetizationField, TOL_UNIT};
use crate::vec3::{cross_matrix, normalize_or_keep, Mat3, Vec3};

/// Step halvings allowed before a step is reported as rejected.
pub const MAX_HALVINGS: usize = 10;

/// `|V|^2 u + u x H - u x (u x H)`.
#[inline]
pub fn f_rhs(u: &Vec3, v: &Vec3, h: &Vec3) -> Vec3 {
    let uh = u.cross(h);
    u * v.norm_squared() + uh - u.cross(&uh)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossTerm {
    /// `e^2 u x u_xx` evaluated from known states.
    Explicit,
    /// `e^2 v x u_xx` with the known state `v` as coefficient, solved
    /// together with the Laplacian.
    LaggedImplicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullModelConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Implicit weight of the exchange operator.
    pub theta: f64,
    pub cross_term: CrossTerm,
    /// Keep every k-th step in the trajectory.
    pub output_every: usize,
}

impl Default for FullModelConfig {
    fn default() -> Self {
        Self { epsilon: 0.1, dt: 2.5e-3, t_end: 0.5, theta: 0.5, cross_term: CrossTerm::LaggedImplicit, output_every: 1 }
    }
}

impl FullModelConfig {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon = {} must be non-negative", self.epsilon)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("T = {} must be non-negative", self.t_end)));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidArgument(format!("theta = {} outside [0, 1]", self.theta)));
        }
        if self.output_every == 0 {
            return Err(Error::InvalidArgument("output_every must be positive".into()));
        }
        Ok(())
    }
}

/// Second-order Laplacian and first-derivative stencils on a nonuniform
/// grid, with ghost reflection at both ends.
#[derive(Debug, Clone)]
pub struct Stencils {
    pub lap: Vec<[f64; 3]>,
    pub der: Vec<[f64; 3]>,
}

impl Stencils {
    pub fn new(x: &[f64]) -> Self {
        let n = x.len();
        let mut lap = vec![[0.0; 3]; n];
        let mut der = vec![[0.0; 3]; n];
        for i in 1..n - 1 {
            let (hm, hp) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            let a = 2.0 / (hm * (hm + hp));
            let c = 2.0 / (hp * (hm + hp));
            lap[i] = [a, -a - c, c];
            der[i] = [-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))];
        }
        let h0 = x[1] - x[0];
        lap[0] = [0.0, -2.0 / (h0 * h0), 2.0 / (h0 * h0)];
        let hn = x[n - 1] - x[n - 2];
        lap[n - 1] = [2.0 / (hn * hn), -2.0 / (hn * hn), 0.0];
        Self { lap, der }
    }

    fn apply(w: &[[f64; 3]], u: &[Vec3], i: usize) -> Vec3 {
        let n = u.len();
        let mut s = u[i] * w[i][1];
        if i > 0 {
            s += u[i - 1] * w[i][0];
        }
        if i + 1 < n {
            s += u[i + 1] * w[i][2];
        }
        s
    }

    pub fn laplacian(&self, u: &[Vec3]) -> Vec<Vec3> {
        (0..u.len()).map(|i| Self::apply(&self.lap, u, i)).collect()
    }

    /// Central derivative; zero at the ends by reflection.
    pub fn derivative(&self, u: &[Vec3]) -> Vec<Vec3> {
        (0..u.len()).map(|i| Self::apply(&self.der, u, i)).collect()
    }
}

/// Nodal right side `F(u, e u_x, H(u))`.
pub fn nonlinear_rhs(u: &[Vec3], st: &Stencils, epsilon: f64) -> Vec<Vec3> {
    let du = st.derivative(u);
    u.iter().zip(&du).map(|(a, d)| f_rhs(a, &(d * epsilon), &slab_stray(a))).collect()
}

/// Source term callback `(t, node index) -> vector`, used for manufactured
/// solutions.
pub type Source<'a> = &'a dyn Fn(f64, usize) -> Vec3;

/// Solves `(I - c A(v)) w = rhs` where `A(v) w = e^2 (w_xx + v x w_xx)`,
/// or only the Laplacian part when `v` is `None`.
fn implicit_solve(st: &Stencils, e2: f64, c: f64, v: Option<&[Vec3]>, rhs: Vec<Vec3>) -> Result<Vec<Vec3>> {
    let n = rhs.len();
    let k = c * e2;
    if k == 0.0 {
        return Ok(rhs);
    }
    match v {
        Some(v) => {
            let mut sys = BlockTridiagonal::zeros(n);
            for i in 0..n {
                let m = Mat3::identity() + cross_matrix(&v[i]);
                let [a, b, cc] = st.lap[i];
                sys.lower[i] = m * (-k * a);
                sys.diag[i] = Mat3::identity() - m * (k * b);
                sys.upper[i] = m * (-k * cc);
            }
            let mut rhs = rhs;
            sys.solve(&mut rhs)?;
            Ok(rhs)
        }
        None => {
            let lower: Vec<f64> = st.lap.iter().map(|w| -k * w[0]).collect();
            let diag: Vec<f64> = st.lap.iter().map(|w| 1.0 - k * w[1]).collect();
            let upper: Vec<f64> = st.lap.iter().map(|w| -k * w[2]).collect();
            let mut out = rhs;
            for comp in 0..3 {
                let mut r: Vec<f64> = out.iter().map(|p| p[comp]).collect();
                solve_tridiagonal(&lower, &diag, &upper, &mut r)?;
                for (p, val) in out.iter_mut().zip(r) {
                    p[comp] = val;
                }
            }
            Ok(out)
        }
    }
}

/// `weight * e^2 (w_xx + v x w_xx)` from a precomputed `w_xx`.
fn exchange(v: &[Vec3], w_lap: &[Vec3], e2: f64, weight: f64) -> Vec<Vec3> {
    v.iter().zip(w_lap).map(|(vv, wl)| (wl + vv.cross(wl)) * (weight * e2)).collect()
}

/// One unprojected predictor-corrector step on merged nodes.
fn raw_step(u: &[Vec3], st: &Stencils, cfg: &FullModelConfig, t: f64, dt: f64, source: Option<Source<'_>>) -> Result<Vec<Vec3>> {
    let e2 = cfg.epsilon * cfg.epsilon;
    let th = cfg.theta;
    let n = u.len();
    let src = |tt: f64| -> Vec<Vec3> {
        match source {
            Some(s) => (0..n).map(|i| s(tt, i)).collect(),
            None => vec![Vec3::zeros(); n],
        }
    };
    let s0 = src(t);
    let f0 = nonlinear_rhs(u, st, cfg.epsilon);
    let lap0 = st.laplacian(u);

    // predictor
    let rhs: Vec<Vec3> = match cfg.cross_term {
        CrossTerm::LaggedImplicit => exchange(u, &lap0, e2, 1.0 - th)
            .into_iter()
            .zip(u.iter().zip(f0.iter().zip(&s0)))
            .map(|(ex, (a, (f, s)))| a + (ex + f + s) * dt)
            .collect(),
        CrossTerm::Explicit => (0..n)
            .map(|i| u[i] + (lap0[i] * ((1.0 - th) * e2) + u[i].cross(&lap0[i]) * e2 + f0[i] + s0[i]) * dt)
            .collect(),
    };
    let coeff = match cfg.cross_term {
        CrossTerm::LaggedImplicit => Some(u),
        CrossTerm::Explicit => None,
    };
    let pred = implicit_solve(st, e2, th * dt, coeff, rhs)?;

    // corrector
    let s1 = src(t + dt);
    let f1 = nonlinear_rhs(&pred, st, cfg.epsilon);
    let mid: Vec<Vec3> = u.iter().zip(&pred).map(|(a, b)| (a + b) * 0.5).collect();
    let rhs: Vec<Vec3> = match cfg.cross_term {
        CrossTerm::LaggedImplicit => exchange(&mid, &lap0, e2, 1.0 - th)
            .into_iter()
            .enumerate()
            .map(|(i, ex)| u[i] + (ex + (f0[i] + f1[i] + s0[i] + s1[i]) * 0.5) * dt)
            .collect(),
        CrossTerm::Explicit => {
            let lap_mid = st.laplacian(&mid);
            (0..n)
                .map(|i| {
                    u[i] + (lap0[i] * ((1.0 - th) * e2)
                        + mid[i].cross(&lap_mid[i]) * e2
                        + (f0[i] + f1[i] + s0[i] + s1[i]) * 0.5)
                        * dt
                })
                .collect()
        }
    };
    let coeff = match cfg.cross_term {
        CrossTerm::LaggedImplicit => Some(mid.as_slice()),
        CrossTerm::Explicit => None,
    };
    implicit_solve(st, e2, th * dt, coeff, rhs)
}

fn max_defect(u: &[Vec3]) -> f64 {
    u.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max)
}

/// Outcome of one accepted macro step.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepInfo {
    /// Largest pre-projection defect over the accepted substeps.
    pub drift: f64,
    /// Deepest halving level used.
    pub halvings: usize,
}

/// Advances merged nodal values by `dt`, halving on excessive drift.
pub fn advance_merged(
    u: &[Vec3],
    st: &Stencils,
    cfg: &FullModelConfig,
    t: f64,
    dt: f64,
    source: Option<Source<'_>>,
) -> Result<(Vec<Vec3>, StepInfo)> {
    advance_rec(u, st, cfg, t, dt, source, 0)
}

fn advance_rec(
    u: &[Vec3],
    st: &Stencils,
    cfg: &FullModelConfig,
    t: f64,
    dt: f64,
    source: Option<Source<'_>>,
    depth: usize,
) -> Result<(Vec<Vec3>, StepInfo)> {
    let attempt = raw_step(u, st, cfg, t, dt, source);
    let drift = match &attempt {
        Ok(v) => {
            let d = max_defect(v);
            if d.is_finite() {
                d
            } else {
                f64::INFINITY
            }
        }
        Err(e) if depth == 0 => return Err(clone_err(e)),
        Err(_) => f64::INFINITY,
    };
    if drift <= MAX_STEP_DRIFT {
        let v: Vec<Vec3> = attempt?.iter().map(normalize_or_keep).collect();
        return Ok((v, StepInfo { drift, halvings: depth }));
    }
    if depth == MAX_HALVINGS {
        return Err(Error::StepRejection { halvings: depth, time: t, drift });
    }
    let (a, ia) = advance_rec(u, st, cfg, t, 0.5 * dt, source, depth + 1)?;
    let (b, ib) = advance_rec(&a, st, cfg, t + 0.5 * dt, 0.5 * dt, source, depth + 1)?;
    Ok((b, StepInfo { drift: ia.drift.max(ib.drift), halvings: ia.halvings.max(ib.halvings) }))
}

fn clone_err(e: &Error) -> Error {
    match e {
        Error::SingularSystem { row, detail } => Error::SingularSystem { row: *row, detail: detail.clone() },
        other => Error::InvalidArgument(other.to_string()),
    }
}

fn check_input(state: &MagnetizationField) -> Result<()> {
    let d = state.max_norm_defect();
    if d > TOL_UNIT {
        return Err(Error::InvalidArgument(format!("state is off the unit sphere by {d:.3e}")));
    }
    Ok(())
}

/// One step of the full model. The interface samples are averaged on
/// ingest; the result carries the shared value on both sides.
pub fn step_full(state: &MagnetizationField, cfg: &FullModelConfig) -> Result<MagnetizationField> {
    Ok(step_full_info(state, cfg)?.0)
}

pub fn step_full_info(state: &MagnetizationField, cfg: &FullModelConfig) -> Result<(MagnetizationField, StepInfo)> {
    cfg.validate()?;
    check_input(state)?;
    let st = Stencils::new(&state.domain.merged_nodes());
    let (u, info) = advance_merged(&state.merged(), &st, cfg, state.time, cfg.dt, None)?;
    Ok((MagnetizationField::from_merged(state.domain.clone(), state.time + cfg.dt, &u)?, info))
}

/// Pre-projection defect of one unrejected step; used by the sphere
/// invariance checks.
pub fn one_step_defect(state: &MagnetizationField, cfg: &FullModelConfig) -> Result<f64> {
    cfg.validate()?;
    let st = Stencils::new(&state.domain.merged_nodes());
    let v = raw_step(&state.merged(), &st, cfg, state.time, cfg.dt, None)?;
    Ok(max_defect(&v))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualReport {
    pub l2_residual: f64,
    pub max_residual: f64,
    /// Largest one-sided second-order `|u_x|` at the boundary.
    pub neumann_defect: f64,
    pub norm_defect: f64,
}

#[derive(Debug, Clone)]
pub struct FullTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<MagnetizationField>,
    pub report: ResidualReport,
    /// Largest pre-projection defect over all steps.
    pub max_step_drift: f64,
    pub max_halvings: usize,
    /// Boundary derivative as seen by the scheme's own ghost reflection.
    pub ghost_neumann_defect: f64,
}

/// Runs the full model on `[t0, t0 + T]` with a uniform step `T / ceil(T / dt)`.
pub fn simulate_full(u_init: &MagnetizationField, cfg: &FullModelConfig) -> Result<FullTrajectory> {
    simulate_full_with_source(u_init, cfg, None)
}

pub fn simulate_full_with_source(
    u_init: &MagnetizationField,
    cfg: &FullModelConfig,
    source: Option<Source<'_>>,
) -> Result<FullTrajectory> {
    cfg.validate()?;
    let domain = u_init.domain.clone();
    let x = domain.merged_nodes();
    let st = Stencils::new(&x);
    let mut u: Vec<Vec3> = u_init.merged();
    if source.is_none() {
        let d = max_defect(&u);
        if d > TOL_UNIT {
            return Err(Error::InvalidArgument(format!("initial state is off the unit sphere by {d:.3e}")));
        }
    }
    let steps = ((cfg.t_end / cfg.dt) - 1e-9).ceil().max(0.0) as usize;
    let dt = if steps == 0 { 0.0 } else { cfg.t_end / steps as f64 };
    let t0 = u_init.time;
    let mut times = vec![t0];
    let mut states = vec![MagnetizationField::from_merged(domain.clone(), t0, &u)?];
    let (mut max_step_drift, mut max_halvings) = (0.0f64, 0usize);
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let (next, info) = advance_merged(&u, &st, cfg, t, dt, source)?;
        max_step_drift = max_step_drift.max(info.drift);
        max_halvings = max_halvings.max(info.halvings);
        u = next;
        if (k + 1) % cfg.output_every == 0 || k + 1 == steps {
            let tk = t0 + (k + 1) as f64 * dt;
            times.push(tk);
            states.push(MagnetizationField::from_merged(domain.clone(), tk, &u)?);
        }
    }
    let ghost_neumann_defect = states
        .iter()
        .map(|s| {
            let m = s.merged();
            let d = st.derivative(&m);
            d[0].amax().max(d[m.len() - 1].amax())
        })
        .fold(0.0, f64::max);
    let report = if times.len() >= 3 && uniform_spacing(&times).is_ok() {
        residual(&states, cfg)?
    } else {
        ResidualReport {
            neumann_defect: states.iter().map(|s| one_sided_neumann(&s.merged(), &x)).fold(0.0, f64::max),
            norm_defect: states.iter().map(|s| s.max_norm_defect()).fold(0.0, f64::max),
            ..Default::default()
        }
    };
    Ok(FullTrajectory { times, states, report, max_step_drift, max_halvings, ghost_neumann_defect })
}

fn uniform_spacing(times: &[f64]) -> Result<f64> {
    if times.len() < 3 {
        return Err(Error::InvalidArgument("residual needs at least three time samples".into()));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("time samples must increase".into()));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::InvalidArgument("time samples must be uniformly spaced".into()));
        }
    }
    Ok(dt)
}

/// Largest one-sided second-order derivative magnitude at both ends.
pub fn one_sided_neumann(u: &[Vec3], x: &[f64]) -> f64 {
    let n = u.len();
    let left = {
        let (h1, h2) = (x[1] - x[0], x[2] - x[0]);
        let w = crate::interp::fd_weights(x[0], &[x[0], x[0] + h1, x[0] + h2], 1);
        u[0] * w[1][0] + u[1] * w[1][1] + u[2] * w[1][2]
    };
    let right = {
        let w = crate::interp::fd_weights(x[n - 1], &x[n - 3..], 1);
        u[n - 3] * w[1][0] + u[n - 2] * w[1][1] + u[n - 1] * w[1][2]
    };
    left.norm().max(right.norm())
}

/// Pointwise residual `u_t - e^2 u_xx - e^2 u x u_xx - F(u, e u_x, H(u))`
/// of a uniformly time-sampled candidate on merged nodes, with the time
/// derivative by second-order differences.
pub fn residual_field(candidate: &[MagnetizationField], cfg: &FullModelConfig) -> Result<Vec<Vec<Vec3>>> {
    let times: Vec<f64> = candidate.iter().map(|c| c.time).collect();
    let dt = uniform_spacing(&times)?;
    let domain: Arc<SlabDomain> = candidate[0].domain.clone();
    let st = Stencils::new(&domain.merged_nodes());
    let e2 = cfg.epsilon * cfg.epsilon;
    let u: Vec<Vec<Vec3>> = candidate.iter().map(|c| c.merged()).collect();
    let nt = u.len();
    let mut out = Vec::with_capacity(nt);
    for k in 0..nt {
        let ut: Vec<Vec3> = (0..u[k].len())
            .map(|i| {
                if k == 0 {
                    (u[1][i] * 4.0 - u[0][i] * 3.0 - u[2][i]) / (2.0 * dt)
                } else if k == nt - 1 {
                    (u[k][i] * 3.0 - u[k - 1][i] * 4.0 + u[k - 2][i]) / (2.0 * dt)
                } else {
                    (u[k + 1][i] - u[k - 1][i]) / (2.0 * dt)
                }
            })
            .collect();
        let lap = st.laplacian(&u[k]);
        let f = nonlinear_rhs(&u[k], &st, cfg.epsilon);
        out.push(
            (0..u[k].len())
                .map(|i| ut[i] - (lap[i] + u[k][i].cross(&lap[i])) * e2 - f[i])
                .collect(),
        );
    }
    Ok(out)
}

/// Space-time trapezoid L2 norm of nodal values on merged nodes.
pub fn l2_merged(values: &[Vec<Vec3>], x: &[f64], dt: f64) -> f64 {
    let nt = values.len();
    let mut total = 0.0;
    for (k, row) in values.iter().enumerate() {
        let wt = if nt == 1 { 1.0 } else if k == 0 || k == nt - 1 { 0.5 * dt } else { dt };
        let mut s = 0.0;
        for i in 0..x.len() - 1 {
            s += 0.5 * (x[i + 1] - x[i]) * (row[i].norm_squared() + row[i + 1].norm_squared());
        }
        total += wt * s;
    }
    total.sqrt()
}

/// Residual norms of a candidate trajectory.
pub fn residual(candidate: &[MagnetizationField], cfg: &FullModelConfig) -> Result<ResidualReport> {
    let r = residual_field(candidate, cfg)?;
    let x = candidate[0].domain.merged_nodes();
    let dt = candidate[1].time - candidate[0].time;
    let l2_residual = l2_merged(&r, &x, dt);
    let max_residual = r.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    let neumann_defect = candidate.iter().map(|c| one_sided_neumann(&c.merged(), &x)).fold(0.0, f64::max);
    let norm_defect = candidate.iter().map(|c| c.max_norm_defect()).fold(0.0, f64::max);
    Ok(ResidualReport { l2_residual, max_residual, neumann_defect, norm_defect })
}
