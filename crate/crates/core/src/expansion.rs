//! Assembled two-scale approximation, the epsilon-convergence study and
//! conormal diagnostics of the remainder.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::full_model::{residual, simulate_full, CrossTerm, FullModelConfig};
use crate::geometry::{build_domain, conormal_weight, DomainConfig, Side, SlabDomain, MIN_CELLS_PER_SIDE};
use crate::interp::fd_weights;
use crate::layer_boundary::{solve_boundary_profile, BoundaryProfile};
use crate::layer_internal::{build_profiles, PicardConfig, ProfileGridConfig, ProfilePair, PicardTrace};
use crate::limit_model::{integrate_limit, LimitTrajectory};
use crate::linalg::loglog_slope;
use crate::strayfield::MagnetizationField;
use crate::vec3::{vec3, Vec3};

/// Fewest full-model cells allowed across one layer width `e`.
pub const MIN_CELLS_PER_LAYER: f64 = 8.0;

/// `u0 + U(t, x, x/e) + e (B(t, x, phi/e) + rho)` with the limit solution
/// supplied by the caller on its own grid.
#[derive(Debug, Clone)]
pub struct ExpansionAnsatz {
    pub profiles: Arc<ProfilePair>,
    pub boundary: Arc<BoundaryProfile>,
    pub epsilon: f64,
}

pub fn assemble_ansatz(profiles: Arc<ProfilePair>, boundary: Arc<BoundaryProfile>, epsilon: f64) -> Result<ExpansionAnsatz> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be positive")));
    }
    let (a, b) = (profiles.grid.horizon(), *boundary.t_nodes.last().unwrap());
    if (a - b).abs() > 1e-12 * a.max(1.0) {
        return Err(Error::GridMismatch(format!("profile horizon {a} differs from boundary-layer horizon {b}")));
    }
    Ok(ExpansionAnsatz { profiles, boundary, epsilon })
}

impl ExpansionAnsatz {
    pub fn horizon(&self) -> f64 {
        self.profiles.grid.horizon()
    }

    /// Interface layer part `U_side(t, x, x / e)`.
    pub fn internal(&self, side: Side, t: f64, x: f64) -> Vec3 {
        self.profiles.sample(side, t, x, x / self.epsilon)
    }

    /// Boundary part `e (B(t, x, phi / e) + rho(t, x))`.
    pub fn boundary_part(&self, t: f64, x: f64) -> Vec3 {
        let z = self.boundary.level_sets.phi(x) / self.epsilon;
        (self.boundary.sample(t, x, z) + self.boundary.rho(t, x)) * self.epsilon
    }

    /// The ansatz on the grid of `limit`, at its time.
    pub fn sample_field(&self, limit: &MagnetizationField) -> MagnetizationField {
        let t = limit.time;
        let d = &limit.domain;
        let mut out = limit.clone();
        for side in [Side::Minus, Side::Plus] {
            let xs = d.nodes(side);
            for (v, &x) in out.values_mut(side).iter_mut().zip(xs) {
                *v += self.internal(side, t, x) + self.boundary_part(t, x);
            }
        }
        out
    }
}

/// `||a - b||` in `L2([0, T] x Omega)`: trapezoid in time and on each side,
/// interface nodes entering each side with that side's value.
pub fn l2_space_time_error(a: &[MagnetizationField], b: &[MagnetizationField]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::GridMismatch(format!("{} vs {} time samples", a.len(), b.len())));
    }
    let mut rows = Vec::with_capacity(a.len());
    for (p, q) in a.iter().zip(b) {
        if p.values_minus.len() != q.values_minus.len() || p.values_plus.len() != q.values_plus.len() {
            return Err(Error::GridMismatch("fields on different grids".into()));
        }
        if (p.time - q.time).abs() > 1e-12 * p.time.abs().max(1.0) {
            return Err(Error::GridMismatch(format!("sample times {} and {} differ", p.time, q.time)));
        }
        let mut s = 0.0;
        for side in [Side::Minus, Side::Plus] {
            let x = p.domain.nodes(side);
            let (u, v) = (p.values(side), q.values(side));
            for i in 0..x.len() - 1 {
                s += 0.5 * (x[i + 1] - x[i]) * ((u[i] - v[i]).norm_squared() + (u[i + 1] - v[i + 1]).norm_squared());
            }
        }
        rows.push((p.time, s));
    }
    let total: f64 = if rows.len() == 1 {
        rows[0].1
    } else {
        rows.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
    };
    Ok(total.sqrt())
}

/// The five summands of the remainder norm, each reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EclassNorms {
    pub order: usize,
    /// `||w||_m`
    pub w: f64,
    /// `||e dn w||_m`
    pub eps_dn_w: f64,
    /// `e ||w||_inf`
    pub eps_w_inf: f64,
    /// `e ||Z w||_inf`, largest over `Z0 = d/dt` and `Z = x(1 - x^2) d/dx`
    pub eps_zw_inf: f64,
    /// `e ||e dn w||_inf`
    pub eps_eps_dn_w_inf: f64,
}

impl EclassNorms {
    pub fn summands(&self) -> [f64; 5] {
        [self.w, self.eps_dn_w, self.eps_w_inf, self.eps_zw_inf, self.eps_eps_dn_w_inf]
    }

    pub fn total(&self) -> f64 {
        self.summands().iter().sum()
    }
}

fn three_point(x: &[f64]) -> Vec<(usize, [f64; 3])> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let s = if k == 0 { 0 } else if k == n - 1 { n - 3 } else { k - 1 };
            let w = fd_weights(x[k], &x[s..s + 3], 1);
            (s, [w[1][0], w[1][1], w[1][2]])
        })
        .collect()
}

fn d_space(w: &[Vec<Vec3>], x: &[f64], weight: impl Fn(f64) -> f64) -> Vec<Vec<Vec3>> {
    let st = three_point(x);
    w.iter()
        .map(|row| {
            st.iter()
                .enumerate()
                .map(|(i, &(s, c))| (row[s] * c[0] + row[s + 1] * c[1] + row[s + 2] * c[2]) * weight(x[i]))
                .collect()
        })
        .collect()
}

fn d_time(w: &[Vec<Vec3>], t: &[f64]) -> Vec<Vec<Vec3>> {
    let st = three_point(t);
    st.iter()
        .map(|&(s, c)| (0..w[0].len()).map(|i| w[s][i] * c[0] + w[s + 1][i] * c[1] + w[s + 2][i] * c[2]).collect())
        .collect()
}

fn l2_nonuniform(w: &[Vec<Vec3>], x: &[f64], t: &[f64]) -> f64 {
    let row: Vec<f64> = w
        .iter()
        .map(|r| (0..x.len() - 1).map(|i| 0.5 * (x[i + 1] - x[i]) * (r[i].norm_squared() + r[i + 1].norm_squared())).sum())
        .collect();
    let total: f64 = (0..t.len() - 1).map(|k| 0.5 * (t[k + 1] - t[k]) * (row[k] + row[k + 1])).sum();
    total.sqrt()
}

fn sup(w: &[Vec<Vec3>]) -> f64 {
    w.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Conormal norm of order `m`: `L2([0, T] x Omega)` norms of
/// `Z0^j Z^k w` for `j + k <= m`, summed in quadrature.
fn conormal_norm(w: &[Vec<Vec3>], x: &[f64], t: &[f64], m: usize) -> f64 {
    let mut total = 0.0;
    let mut by_time = w.to_vec();
    for j in 0..=m {
        let mut f = by_time.clone();
        for k in 0..=(m - j) {
            total += l2_nonuniform(&f, x, t).powi(2);
            if k < m - j {
                f = d_space(&f, x, conormal_weight);
            }
        }
        if j < m {
            by_time = d_time(&by_time, t);
        }
    }
    total.sqrt()
}

/// Discrete remainder norms of `w` sampled as `w[it][i]` on merged nodes
/// `x` at times `t`. `dn` is taken as `d/dx` (unit normals in one
/// dimension); `m <= 2`.
pub fn eclass_norms(w: &[Vec<Vec3>], x: &[f64], t: &[f64], epsilon: f64, m: usize) -> Result<EclassNorms> {
    if m > 2 {
        return Err(Error::InvalidArgument(format!("conormal order {m} > 2")));
    }
    if w.len() != t.len() || t.len() < 3 || x.len() < 3 || w.iter().any(|r| r.len() != x.len()) {
        return Err(Error::GridMismatch("remainder samples do not match the grid".into()));
    }
    let eps_dn: Vec<Vec<Vec3>> = d_space(w, x, |_| epsilon);
    let zx = d_space(w, x, conormal_weight);
    let zt = d_time(w, t);
    Ok(EclassNorms {
        order: m,
        w: conormal_norm(w, x, t, m),
        eps_dn_w: conormal_norm(&eps_dn, x, t, m),
        eps_w_inf: epsilon * sup(w),
        eps_zw_inf: epsilon * sup(&zx).max(sup(&zt)),
        eps_eps_dn_w_inf: epsilon * sup(&eps_dn),
    })
}

/// Named initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    /// Constant unit vectors on each side.
    PiecewiseConstant { minus: Vec3, plus: Vec3 },
    /// `normalize(0.6 + 0.3 x, 0.8, 0.2 x^2)`: continuous, with nonzero
    /// boundary slope.
    Tilted,
    /// Tilted data with the first component flipped on the plus side.
    TiltedJump,
}

impl InitialData {
    pub fn jump_fixture() -> Self {
        InitialData::PiecewiseConstant { minus: vec3(0.6, 0.8, 0.0), plus: vec3(-0.6, 0.8, 0.0) }
    }

    pub fn value(&self, side: Side, x: f64) -> Vec3 {
        match *self {
            InitialData::PiecewiseConstant { minus, plus } => match side {
                Side::Minus => minus.normalize(),
                Side::Plus => plus.normalize(),
            },
            InitialData::Tilted => vec3(0.6 + 0.3 * x, 0.8, 0.2 * x * x).normalize(),
            InitialData::TiltedJump => {
                let s = if side == Side::Plus { -1.0 } else { 1.0 };
                vec3(s * (0.6 + 0.3 * x), 0.8, 0.2 * x * x).normalize()
            }
        }
    }

    pub fn field(&self, domain: Arc<SlabDomain>) -> MagnetizationField {
        MagnetizationField::from_fn(domain, 0.0, |s, x| self.value(s, x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub initial: InitialData,
    pub epsilons: Vec<f64>,
    pub t_end: f64,
    /// Full-model time step.
    pub dt: f64,
    /// Time step of the limit integrations.
    pub limit_dt: f64,
    /// Full-model cells per layer width `e`.
    pub cells_per_epsilon: f64,
    /// Cells per side of the grid the profiles are built on.
    pub profile_cells: usize,
    pub profile_grid: ProfileGridConfig,
    pub picard: PicardConfig,
    pub domain: DomainConfig,
    pub eclass_order: usize,
    /// Implicit weight of the full-model exchange operator.
    pub theta: f64,
    pub cross_term: CrossTerm,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            initial: InitialData::jump_fixture(),
            epsilons: vec![0.1, 0.05, 0.025, 0.0125],
            t_end: 0.5,
            dt: 2.5e-3,
            limit_dt: 1e-3,
            cells_per_epsilon: 16.0,
            profile_cells: 64,
            profile_grid: ProfileGridConfig::default(),
            picard: PicardConfig::default(),
            domain: DomainConfig::uniform(64),
            eclass_order: 1,
            theta: 0.5,
            cross_term: CrossTerm::LaggedImplicit,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.len() < 3 {
            return Err(Error::InvalidArgument(format!("need at least 3 epsilon values, got {}", self.epsilons.len())));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(Error::InvalidArgument("epsilon values must lie in (0, 1)".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("epsilon values must be strictly decreasing".into()));
        }
        if !(self.t_end > 0.0 && self.dt > 0.0 && self.limit_dt > 0.0) {
            return Err(Error::InvalidArgument("horizon and time steps must be positive".into()));
        }
        if self.eclass_order > 2 {
            return Err(Error::InvalidArgument("conormal order must be at most 2".into()));
        }
        Ok(())
    }
}

/// Outcome for one `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRun {
    pub epsilon: f64,
    pub cells_per_side: usize,
    pub error_l2: f64,
    pub residual_l2: f64,
    /// One-sided boundary slope of the ansatz, largest over time.
    pub ansatz_neumann: f64,
    pub eclass: EclassNorms,
    /// Totals of the remainder norm for conormal orders 0, 1, 2.
    pub eclass_totals: [f64; 3],
    pub max_halvings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub epsilons: Vec<f64>,
    pub errors_l2: Vec<f64>,
    pub residuals: Vec<f64>,
    pub slope: f64,
    /// Slope fitted on the first `i + 1` rows (NaN for the first).
    pub running_slopes: Vec<f64>,
    pub eclass: Vec<EclassNorms>,
    pub runs: Vec<EpsilonRun>,
    /// Horizon actually used.
    pub horizon: f64,
    pub picard: PicardTrace,
    pub profile_decay_rate: f64,
    pub profile_max: f64,
}

/// Layer components shared by every `e`.
#[derive(Debug, Clone)]
pub struct SharedLayers {
    pub profiles: Arc<ProfilePair>,
    pub boundary: Arc<BoundaryProfile>,
    pub picard: PicardTrace,
    pub horizon: f64,
}

/// Builds profiles and boundary layer, shortening the horizon (halving, at
/// most three times) if the Picard iteration stops contracting or does not
/// converge within its iteration cap.
pub fn build_layers(cfg: &StudyConfig) -> Result<SharedLayers> {
    let domain = Arc::new(build_domain(DomainConfig { cells_per_side: cfg.profile_cells, ..cfg.domain.clone() })?);
    let u_init = cfg.initial.field(domain);
    let mut horizon = cfg.t_end;
    let mut attempts = 0;
    loop {
        let limit = integrate_limit(&u_init, horizon, cfg.limit_dt)?;
        let grid = ProfileGridConfig { t_end: horizon, ..cfg.profile_grid.clone() };
        // an iteration cap reached without convergence counts as a
        // non-contracting iteration
        let built = build_profiles(&limit, &grid, &cfg.picard).and_then(|out| {
            if out.converged {
                Ok(out)
            } else {
                Err(Error::NonContraction { iterate: out.trace.distances.len(), horizon })
            }
        });
        match built {
            Ok(out) => {
                let boundary = solve_boundary_profile(&limit, &grid)?;
                return Ok(SharedLayers {
                    profiles: Arc::new(out.profiles),
                    boundary: Arc::new(boundary),
                    picard: out.trace,
                    horizon,
                });
            }
            Err(Error::NonContraction { .. }) if attempts < 3 => {
                attempts += 1;
                horizon *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Full-model run from the ansatz at `t = 0` and its comparison with the
/// limit solution and the ansatz.
pub fn run_epsilon(cfg: &StudyConfig, layers: &SharedLayers, epsilon: f64) -> Result<EpsilonRun> {
    let cells = (cfg.cells_per_epsilon / epsilon).ceil() as usize;
    let cells = cells.max(MIN_CELLS_PER_SIDE);
    let h = 1.0 / cells as f64;
    if epsilon / h < MIN_CELLS_PER_LAYER {
        return Err(Error::UnresolvedLayer { epsilon, cells_per_width: epsilon / h });
    }
    let domain = Arc::new(build_domain(DomainConfig { cells_per_side: cells, ..cfg.domain.clone() })?);
    let u_init = cfg.initial.field(domain.clone());
    let t_end = layers.horizon;
    let limit = integrate_limit(&u_init, t_end, cfg.limit_dt)?;
    let ansatz = assemble_ansatz(layers.profiles.clone(), layers.boundary.clone(), epsilon)?;
    let start = ansatz.sample_field(&limit.sample(0.0)).map(|v| v.normalize());
    let fcfg = FullModelConfig {
        epsilon,
        dt: cfg.dt,
        t_end,
        theta: cfg.theta,
        cross_term: cfg.cross_term,
        output_every: 1,
    };
    let traj = simulate_full(&start, &fcfg)?;
    let limit_at: Vec<MagnetizationField> = traj.times.iter().map(|&t| limit.sample(t)).collect();
    let approx: Vec<MagnetizationField> = limit_at.iter().map(|l| ansatz.sample_field(l)).collect();
    let error_l2 = l2_space_time_error(&traj.states, &limit_at)?;
    let res = residual(&approx, &fcfg)?;
    let x = domain.merged_nodes();
    let w: Vec<Vec<Vec3>> = traj
        .states
        .iter()
        .zip(&approx)
        .map(|(u, a)| u.merged().iter().zip(a.merged()).map(|(p, q)| (p - q) / epsilon).collect())
        .collect();
    let mut eclass_totals = [0.0; 3];
    for (m, slot) in eclass_totals.iter_mut().enumerate() {
        *slot = eclass_norms(&w, &x, &traj.times, epsilon, m)?.total();
    }
    let eclass = eclass_norms(&w, &x, &traj.times, epsilon, cfg.eclass_order)?;
    Ok(EpsilonRun {
        epsilon,
        cells_per_side: cells,
        error_l2,
        residual_l2: res.l2_residual,
        ansatz_neumann: res.neumann_defect,
        eclass,
        eclass_totals,
        max_halvings: traj.max_halvings,
    })
}

/// The convergence study over `cfg.epsilons`, the runs spread over at most
/// `jobs` threads. Results do not depend on `jobs`.
pub fn convergence_study(cfg: &StudyConfig, jobs: usize) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| {
        let layers = build_layers(cfg)?;
        for &e in &cfg.epsilons {
            let cells = (cfg.cells_per_epsilon / e).ceil().max(MIN_CELLS_PER_SIDE as f64);
            if e * cells < MIN_CELLS_PER_LAYER {
                return Err(Error::UnresolvedLayer { epsilon: e, cells_per_width: e * cells });
            }
        }
        let runs: Vec<EpsilonRun> =
            cfg.epsilons.par_iter().map(|&e| run_epsilon(cfg, &layers, e)).collect::<Result<_>>()?;
        Ok(report_from_runs(runs, &layers))
    })
}

fn report_from_runs(runs: Vec<EpsilonRun>, layers: &SharedLayers) -> ConvergenceReport {
    let epsilons: Vec<f64> = runs.iter().map(|r| r.epsilon).collect();
    let errors_l2: Vec<f64> = runs.iter().map(|r| r.error_l2).collect();
    let running_slopes = (0..runs.len())
        .map(|i| if i == 0 { f64::NAN } else { loglog_slope(&epsilons[..=i], &errors_l2[..=i]) })
        .collect();
    ConvergenceReport {
        slope: loglog_slope(&epsilons, &errors_l2),
        residuals: runs.iter().map(|r| r.residual_l2).collect(),
        eclass: runs.iter().map(|r| r.eclass).collect(),
        epsilons,
        errors_l2,
        running_slopes,
        runs,
        horizon: layers.horizon,
        picard: layers.picard.clone(),
        profile_decay_rate: layers.profiles.decay_rate,
        profile_max: layers.profiles.u.max_abs(),
    }
}

/// Limit trajectory on a uniform grid, for callers that want `u0` alone.
pub fn limit_on_grid(initial: &InitialData, cells_per_side: usize, t_end: f64, dt: f64) -> Result<LimitTrajectory> {
    let domain = Arc::new(build_domain(DomainConfig::uniform(cells_per_side))?);
    integrate_limit(&initial.field(domain), t_end, dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(n: usize) -> Arc<SlabDomain> {
        Arc::new(build_domain(DomainConfig::uniform(n)).unwrap())
    }

    #[test]
    fn l2_error_examples() {
        let d = dom(16);
        let a: Vec<MagnetizationField> =
            (0..=4).map(|k| MagnetizationField::constant(d.clone(), Vec3::x()).with_time(k as f64 * 0.25)).collect();
        assert_eq!(l2_space_time_error(&a, &a).unwrap(), 0.0);
        let b: Vec<MagnetizationField> = a.iter().map(|f| f.map(|_| Vec3::zeros())).collect();
        assert!((l2_space_time_error(&a, &b).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn layer_mass_scales_like_root_epsilon() {
        let eps = 0.05;
        let d = dom(400);
        let a: Vec<MagnetizationField> = (0..=2)
            .map(|k| MagnetizationField::from_fn(d.clone(), k as f64 * 0.5, |_, x| Vec3::x() * (-x.abs() / eps).exp()))
            .collect();
        let b: Vec<MagnetizationField> = a.iter().map(|f| f.map(|_| Vec3::zeros())).collect();
        let expect = (eps * (1.0 - (-2.0 / eps).exp())).sqrt();
        let got = l2_space_time_error(&a, &b).unwrap();
        assert!((got - expect).abs() < 1e-3 * expect, "{got} vs {expect}");
    }

    #[test]
    fn eclass_zero_and_layer_examples() {
        let t: Vec<f64> = (0..=10).map(|k| k as f64 * 0.05).collect();
        let mut ratios = Vec::new();
        let mut prev: Option<(f64, f64)> = None;
        for eps in [0.1, 0.05, 0.025] {
            let n = (32.0 / eps) as usize;
            let x: Vec<f64> = (0..=2 * n).map(|i| -1.0 + i as f64 / n as f64).collect();
            let zero = vec![vec![Vec3::zeros(); x.len()]; t.len()];
            assert_eq!(eclass_norms(&zero, &x, &t, eps, 1).unwrap().total(), 0.0);
            let w: Vec<Vec<Vec3>> = t.iter().map(|_| x.iter().map(|&xx| Vec3::x() * (-xx.abs() / eps).exp()).collect()).collect();
            let base = l2_nonuniform(&w, &x, &t);
            let z = l2_nonuniform(&d_space(&w, &x, conormal_weight), &x, &t);
            let dx = l2_nonuniform(&d_space(&w, &x, |_| 1.0), &x, &t);
            assert!(z <= 3.0 * base);
            assert!(dx * eps >= 0.5 * base);
            if let Some((b0, z0)) = prev {
                ratios.push((z / base) / (z0 / b0));
            }
            prev = Some((base, z));
        }
        assert!(ratios.iter().all(|r| *r < 3.0 && *r > 1.0 / 3.0));
    }

    #[test]
    fn rejects_bad_epsilon_lists() {
        let cfg = StudyConfig { epsilons: vec![0.1, 0.1, 0.05], ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = StudyConfig { epsilons: vec![0.1, 0.05], ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unresolved_layer_refused() {
        let cfg = StudyConfig { cells_per_epsilon: 4.0, ..Default::default() };
        let layers = SharedLayers {
            profiles: Arc::new(dummy_profiles()),
            boundary: Arc::new(dummy_boundary()),
            picard: PicardTrace::default(),
            horizon: 0.1,
        };
        assert!(matches!(run_epsilon(&cfg, &layers, 0.1), Err(Error::UnresolvedLayer { .. })));
    }

    fn dummy_profiles() -> ProfilePair {
        let tr = limit_on_grid(&InitialData::jump_fixture(), 16, 0.1, 1e-2).unwrap();
        let g = ProfileGridConfig { t_end: 0.1, h0: 0.05, ratio: 1.1, ..Default::default() };
        build_profiles(&tr, &g, &PicardConfig::default()).unwrap().profiles
    }

    fn dummy_boundary() -> BoundaryProfile {
        let tr = limit_on_grid(&InitialData::jump_fixture(), 16, 0.1, 1e-2).unwrap();
        let g = ProfileGridConfig { t_end: 0.1, h0: 0.05, ratio: 1.1, ..Default::default() };
        solve_boundary_profile(&tr, &g).unwrap()
    }

    #[test]
    fn zero_layers_reproduce_limit() {
        let tr = limit_on_grid(&InitialData::Tilted, 16, 0.1, 1e-2).unwrap();
        let g = ProfileGridConfig { t_end: 0.1, h0: 0.05, ratio: 1.1, ..Default::default() };
        let p = build_profiles(&tr, &g, &PicardConfig::default()).unwrap().profiles;
        assert_eq!(p.u.max_abs(), 0.0);
        // boundary layer of constant data is zero too
        let ansatz = assemble_ansatz(Arc::new(p), Arc::new(dummy_boundary()), 0.1).unwrap();
        let s = tr.sample(0.05);
        assert_eq!(ansatz.sample_field(&s).merged(), s.merged());
    }
}
