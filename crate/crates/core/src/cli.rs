//! Command-line driver: one subcommand per pipeline stage.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use crate::config::{load_config, parse_tol_override, RunConfig};
use crate::csvio::{Metadata, Table};
use crate::error::{Error, Result};
use crate::expansion::{assemble_ansatz, build_layers, convergence_study, ConvergenceReport, MIN_CELLS_PER_LAYER};
use crate::full_model::{residual, simulate_full, FullModelConfig};
use crate::geometry::{build_domain, Side, SlabDomain, MIN_CELLS_PER_SIDE};
use crate::limit_model::integrate_limit;
use crate::plot::{loglog_svg, FitLine, Series};
use crate::strayfield::{check_spectral, MagnetizationField};

/// Environment variable overriding the output directory of the config.
pub const OUT_ENV: &str = "FERROLAYER_OUT";
pub const DEFAULT_OUT: &str = "ferrolayer-out";
/// Spacing of the time slices written for trajectories.
pub const OUTPUT_DT: f64 = 0.01;
/// Spacing of the time slices written for layer profiles.
pub const PROFILE_OUTPUT_DT: f64 = 0.05;
/// Bound on the spectral identity errors reported by `check-stray`.
pub const STRAY_TOL: f64 = 1e-12;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

const SCHEMA_HELP: &str = "\
Output files (first line '# key=value ...' metadata, then a CSV header):
  limit.csv      t,x,side,u1,u2,u3          side is -1 or 1
  full.csv       t,x,side,u1,u2,u3
  ansatz.csv     t,x,side,u1,u2,u3
  profiles.csv   t,x,y,minus1,minus2,minus3,plus1,plus2,plus3   y = |fast variable|
  boundary.csv   t,x,z,u1,u2,u3             (profiles --boundary)
  report.csv     epsilon,cells_per_side,err_l2,residual_l2,residual_over_eps,
                 slope_running,eclass_m0,eclass_m1,eclass_m2,w,eps_dn_w,
                 eps_w_inf,eps_zw_inf,eps_eps_dn_w_inf,max_halvings
  runs/eps_<i>.csv   one report row per epsilon, merged into report.csv
  plot.svg       (converge --plot) log-log error and residual against epsilon

Exit status: 0 success, 2 invalid input, 3 solver abort.
The output directory is --out, else $FERROLAYER_OUT, else output_dir from
the config, else ./ferrolayer-out.";

#[derive(Debug, Parser)]
#[command(name = "ferrolayer", version, about = "Layer asymptotics for the Landau-Lifschitz equations in a slab", after_long_help = SCHEMA_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Config file; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Threads for per-epsilon runs.
    #[arg(long, global = true, default_value_t = 1, value_name = "N")]
    pub jobs: usize,
    /// Also write plot.svg (converge).
    #[arg(long, global = true)]
    pub plot: bool,
    /// Override a tolerance: picard, tail or unit_norm.
    #[arg(long = "tol-override", global = true, value_name = "K=V")]
    pub tol_override: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the limit model.
    Limit,
    /// Run the full model from the initial data.
    Full {
        /// Defaults to the first configured epsilon.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Build the internal-layer profiles (or the boundary layer).
    Profiles {
        #[arg(long)]
        boundary: bool,
        /// Write every n-th fast-variable node.
        #[arg(long, default_value_t = 4)]
        y_stride: usize,
    },
    /// Sample the assembled approximation.
    Ansatz {
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Convergence study over the configured epsilons.
    Converge,
    /// Spectral stray-field identity checks.
    CheckStray,
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_solver_abort() {
        EXIT_SOLVER
    } else {
        EXIT_INVALID
    }
}

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::InvalidArgument(_) => "invalid-argument",
        Error::GridMismatch(_) => "grid-mismatch",
        Error::SingularSystem { .. } => "singular-system",
        Error::NormDrift { .. } => "norm-drift",
        Error::StepRejection { .. } => "step-rejection",
        Error::NonContraction { .. } => "non-contraction",
        Error::UnresolvedLayer { .. } => "unresolved-layer",
        Error::Config(_) => "config",
        Error::Csv { .. } => "csv",
        Error::Io(_) => "io",
    }
}

/// One-line failure reason, `error kind=<kind> reason=<text>`.
pub fn error_line(e: &Error) -> String {
    let text = e.to_string();
    let reason = text.split_whitespace().collect::<Vec<_>>().join(" ");
    format!("error kind={} reason={}", error_kind(e), reason)
}

/// Parses arguments, runs, and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{}", error_line(&e));
            exit_code(&e)
        }
    }
}

/// Loads the config, applies overrides, resolves the output directory.
pub fn prepare(cli: &Cli) -> Result<(RunConfig, PathBuf)> {
    let (mut cfg, warnings) = match &cli.config {
        Some(p) => load_config(p)?,
        None => (RunConfig::default(), Vec::new()),
    };
    for w in warnings {
        eprintln!("warning: {w}");
    }
    for o in &cli.tol_override {
        let (k, v) = parse_tol_override(o)?;
        cfg.apply_override(&k, v)?;
    }
    cfg.validate()?;
    if cli.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok((cfg, out))
}

/// Executes the subcommand; returns the summary lines for stdout.
pub fn run(cli: &Cli) -> Result<Vec<String>> {
    let (cfg, out) = prepare(cli)?;
    match &cli.command {
        Command::Limit => run_limit(&cfg, &out),
        Command::Full { epsilon } => run_full(&cfg, &out, pick_epsilon(&cfg, *epsilon)?),
        Command::Profiles { boundary, y_stride } => run_profiles(&cfg, &out, *boundary, *y_stride),
        Command::Ansatz { epsilon } => run_ansatz(&cfg, &out, pick_epsilon(&cfg, *epsilon)?),
        Command::Converge => run_converge(&cfg, &out, cli.jobs, cli.plot),
        Command::CheckStray => run_check_stray(&cfg),
    }
}

fn pick_epsilon(cfg: &RunConfig, flag: Option<f64>) -> Result<f64> {
    let e = flag.unwrap_or(cfg.study.epsilons[0]);
    if e > 0.0 && e.is_finite() {
        Ok(e)
    } else {
        Err(Error::InvalidArgument(format!("epsilon must be positive, got {e}")))
    }
}

/// Indices of the first stored time in each slice of width `step`, plus
/// the final time.
pub fn thin_times(times: &[f64], step: f64) -> Vec<usize> {
    let mut keep = Vec::new();
    let mut next = 0.0;
    for (i, &t) in times.iter().enumerate() {
        if t >= next - 1e-9 {
            keep.push(i);
            next = ((t + 1e-9) / step).floor() * step + step;
        }
    }
    if let Some(last) = times.len().checked_sub(1) {
        if keep.last() != Some(&last) {
            keep.push(last);
        }
    }
    keep
}

fn push_field_rows(table: &mut Table, u: &MagnetizationField) {
    for side in [Side::Minus, Side::Plus] {
        for (x, v) in u.domain.nodes(side).iter().zip(u.values(side)) {
            table.push(vec![u.time, *x, side.sign(), v.x, v.y, v.z]);
        }
    }
}

fn full_grid_cells(cfg: &RunConfig, epsilon: f64) -> usize {
    ((cfg.study.cells_per_epsilon / epsilon).ceil() as usize).max(MIN_CELLS_PER_SIDE)
}

fn domain(cfg: &RunConfig, cells: usize) -> Result<Arc<SlabDomain>> {
    Ok(Arc::new(build_domain(cfg.domain_config(cells))?))
}

fn write(out: &Path, name: &str, table: &Table) -> Result<String> {
    let path = out.join(name);
    table.write(&path)?;
    Ok(format!("wrote {}", path.display()))
}

fn run_limit(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let d = domain(cfg, cfg.domain.cells_per_side)?;
    let traj = integrate_limit(&cfg.initial_data().field(d), cfg.study.t_end, cfg.study.limit_dt)?;
    let mut meta = Metadata::new(&cfg.hash());
    meta.push("kind", "limit")
        .push("grids", format!("cells_per_side={},dt={}", cfg.domain.cells_per_side, cfg.study.limit_dt))
        .push("t_end", cfg.study.t_end)
        .push("norm_drift", traj.norm_drift);
    let mut table = Table::new(meta, &["t", "x", "side", "u1", "u2", "u3"]);
    for i in thin_times(&traj.times, OUTPUT_DT) {
        push_field_rows(&mut table, &traj.states[i]);
    }
    Ok(vec![write(out, "limit.csv", &table)?, format!("norm_drift={:e}", traj.norm_drift)])
}

fn full_model_config(cfg: &RunConfig, epsilon: f64, t_end: f64) -> FullModelConfig {
    FullModelConfig {
        epsilon,
        dt: cfg.study.dt,
        t_end,
        theta: cfg.study.theta,
        cross_term: cfg.cross_term(),
        output_every: 1,
    }
}

fn run_full(cfg: &RunConfig, out: &Path, epsilon: f64) -> Result<Vec<String>> {
    let cells = full_grid_cells(cfg, epsilon).max(cfg.domain.cells_per_side);
    let d = domain(cfg, cells)?;
    let fcfg = full_model_config(cfg, epsilon, cfg.study.t_end);
    // the full model is single-valued at the interface; start from the
    // projected average there
    let merged: Vec<_> = cfg.initial_data().field(d.clone()).merged().iter().map(|v| v.normalize()).collect();
    let start = MagnetizationField::from_merged(d, 0.0, &merged)?;
    let traj = simulate_full(&start, &fcfg)?;
    let on_sphere = traj.states.iter().all(|s| s.max_norm_defect() <= cfg.tolerances.unit_norm);
    let mut meta = Metadata::new(&cfg.hash());
    meta.push("kind", "full")
        .push("epsilon", epsilon)
        .push("grids", format!("cells_per_side={cells},dt={}", fcfg.dt))
        .push("theta", fcfg.theta)
        .push("t_end", fcfg.t_end)
        .push("max_step_drift", traj.max_step_drift)
        .push("max_halvings", traj.max_halvings)
        .push("on_sphere", on_sphere);
    let mut table = Table::new(meta, &["t", "x", "side", "u1", "u2", "u3"]);
    for i in thin_times(&traj.times, OUTPUT_DT) {
        push_field_rows(&mut table, &traj.states[i]);
    }
    Ok(vec![
        write(out, "full.csv", &table)?,
        format!("max_step_drift={:e} on_sphere={on_sphere}", traj.max_step_drift),
    ])
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(";")
}

fn run_profiles(cfg: &RunConfig, out: &Path, boundary: bool, y_stride: usize) -> Result<Vec<String>> {
    if y_stride == 0 {
        return Err(Error::InvalidArgument("--y-stride must be at least 1".into()));
    }
    let layers = build_layers(&cfg.study_config())?;
    let mut meta = Metadata::new(&cfg.hash());
    meta.push("grids", format!("y_max={},h0={},ratio={},dt={}", cfg.profiles.y_max, cfg.profiles.h0, cfg.profiles.ratio, cfg.profiles.dt))
        .push("horizon", layers.horizon)
        .push("picard_distances", join(&layers.picard.distances));
    if boundary {
        let b = &layers.boundary;
        let tail = b.tail();
        meta.push("kind", "boundary").push("tail", tail).push("tail_ok", tail <= cfg.tolerances.tail);
        let mut table = Table::new(meta, &["t", "x", "z", "u1", "u2", "u3"]);
        for it in thin_times(&b.t_nodes, PROFILE_OUTPUT_DT) {
            for (ix, &x) in b.x_nodes.iter().enumerate() {
                for k in (0..b.z.len()).step_by(y_stride) {
                    let v = b.values[it][ix][k];
                    table.push(vec![b.t_nodes[it], x, b.z[k], v.x, v.y, v.z]);
                }
            }
        }
        return Ok(vec![write(out, "boundary.csv", &table)?, format!("tail={tail:e}")]);
    }
    let p = &layers.profiles;
    let g = &p.grid;
    let tail = p.tail();
    let (value_res, deriv_res) = p.transmission_residuals();
    meta.push("kind", "profiles")
        .push("tol_picard", cfg.tolerances.picard)
        .push("decay_rate", p.decay_rate)
        .push("tail", tail)
        .push("tail_ok", tail <= cfg.tolerances.tail)
        .push("transmission_value", value_res)
        .push("transmission_derivative", deriv_res);
    let mut table = Table::new(meta, &["t", "x", "y", "minus1", "minus2", "minus3", "plus1", "plus2", "plus3"]);
    for it in thin_times(&g.t_nodes, PROFILE_OUTPUT_DT) {
        for ix in 0..g.nx() {
            let (m, pl) = (p.u.line(it, ix, Side::Minus), p.u.line(it, ix, Side::Plus));
            for k in (0..g.ny()).step_by(y_stride) {
                table.push(vec![g.t_nodes[it], g.x_nodes[ix], g.y[k], m[k].x, m[k].y, m[k].z, pl[k].x, pl[k].y, pl[k].z]);
            }
        }
    }
    Ok(vec![
        write(out, "profiles.csv", &table)?,
        format!(
            "picard_iterations={} decay_rate={:.4} tail={tail:e} transmission_value={value_res:e} transmission_derivative={deriv_res:e}",
            layers.picard.distances.len(),
            p.decay_rate
        ),
    ])
}

fn run_ansatz(cfg: &RunConfig, out: &Path, epsilon: f64) -> Result<Vec<String>> {
    let cells = full_grid_cells(cfg, epsilon);
    if epsilon * (cells as f64) < MIN_CELLS_PER_LAYER {
        return Err(Error::UnresolvedLayer { epsilon, cells_per_width: epsilon * cells as f64 });
    }
    let layers = build_layers(&cfg.study_config())?;
    let ansatz = assemble_ansatz(layers.profiles.clone(), layers.boundary.clone(), epsilon)?;
    let d = domain(cfg, cells)?;
    let limit = integrate_limit(&cfg.initial_data().field(d), layers.horizon, cfg.study.limit_dt)?;
    let fcfg = full_model_config(cfg, epsilon, layers.horizon);
    let steps = (layers.horizon / fcfg.dt).ceil() as usize;
    let dt = layers.horizon / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let states: Vec<MagnetizationField> = times.iter().map(|&t| ansatz.sample_field(&limit.sample(t))).collect();
    let res = residual(&states, &fcfg)?;
    let mut meta = Metadata::new(&cfg.hash());
    meta.push("kind", "ansatz")
        .push("epsilon", epsilon)
        .push("grids", format!("cells_per_side={cells},dt={dt}"))
        .push("horizon", layers.horizon)
        .push("residual_l2", res.l2_residual)
        .push("neumann_defect", res.neumann_defect);
    let mut table = Table::new(meta, &["t", "x", "side", "u1", "u2", "u3"]);
    for i in thin_times(&times, OUTPUT_DT) {
        push_field_rows(&mut table, &states[i]);
    }
    Ok(vec![
        write(out, "ansatz.csv", &table)?,
        format!("residual_l2={:e} residual_over_eps={:e}", res.l2_residual, res.l2_residual / epsilon),
    ])
}

pub const REPORT_COLUMNS: [&str; 15] = [
    "epsilon",
    "cells_per_side",
    "err_l2",
    "residual_l2",
    "residual_over_eps",
    "slope_running",
    "eclass_m0",
    "eclass_m1",
    "eclass_m2",
    "w",
    "eps_dn_w",
    "eps_w_inf",
    "eps_zw_inf",
    "eps_eps_dn_w_inf",
    "max_halvings",
];

fn report_meta(cfg: &RunConfig, report: &ConvergenceReport) -> Metadata {
    let mut meta = Metadata::new(&cfg.hash());
    meta.push("kind", "converge")
        .push(
            "grids",
            format!("cells_per_epsilon={},dt={},profile_cells={}", cfg.study.cells_per_epsilon, cfg.study.dt, cfg.study.profile_cells),
        )
        .push("horizon", report.horizon)
        .push("slope", report.slope)
        .push("eclass_order", cfg.study.eclass_order)
        .push("picard_distances", join(&report.picard.distances))
        .push("profile_decay_rate", report.profile_decay_rate)
        .push("profile_max", report.profile_max);
    meta
}

fn report_row(report: &ConvergenceReport, i: usize) -> Vec<f64> {
    let r = &report.runs[i];
    let s = r.eclass.summands();
    vec![
        r.epsilon,
        r.cells_per_side as f64,
        r.error_l2,
        r.residual_l2,
        r.residual_l2 / r.epsilon,
        report.running_slopes[i],
        r.eclass_totals[0],
        r.eclass_totals[1],
        r.eclass_totals[2],
        s[0],
        s[1],
        s[2],
        s[3],
        s[4],
        r.max_halvings as f64,
    ]
}

fn run_converge(cfg: &RunConfig, out: &Path, jobs: usize, plot: bool) -> Result<Vec<String>> {
    let report = convergence_study(&cfg.study_config(), jobs)?;
    let meta = report_meta(cfg, &report);
    let mut lines = Vec::new();
    let mut parts = Vec::new();
    for i in 0..report.runs.len() {
        let mut m = meta.clone();
        m.push("run", i);
        let mut t = Table::new(m, &REPORT_COLUMNS);
        t.push(report_row(&report, i));
        let path = out.join("runs").join(format!("eps_{i}.csv"));
        t.write(&path)?;
        parts.push(path);
    }
    let mut merged = Table::new(meta, &REPORT_COLUMNS);
    for p in &parts {
        let part = crate::csvio::read_table(p)?;
        if part.columns != merged.columns {
            return Err(Error::Csv { line: 2, detail: format!("{}: unexpected columns", p.display()) });
        }
        merged.rows.extend(part.rows);
    }
    lines.push(write(out, "report.csv", &merged)?);
    if plot {
        let lx: Vec<f64> = report.epsilons.iter().map(|e| e.log10()).collect();
        let ly: Vec<f64> = report.errors_l2.iter().map(|e| e.log10()).collect();
        let n = lx.len() as f64;
        let intercept = ly.iter().sum::<f64>() / n - report.slope * lx.iter().sum::<f64>() / n;
        let svg = loglog_svg(
            "L2 error and ansatz residual",
            "epsilon",
            &[
                Series { label: "err_l2", x: &report.epsilons, y: &report.errors_l2 },
                Series { label: "residual_l2", x: &report.epsilons, y: &report.residuals },
            ],
            Some(&FitLine { slope: report.slope, intercept }),
        );
        let path = out.join("plot.svg");
        std::fs::write(&path, svg)?;
        lines.push(format!("wrote {}", path.display()));
    }
    lines.push(format!("slope={:.4} horizon={}", report.slope, report.horizon));
    Ok(lines)
}

fn run_check_stray(cfg: &RunConfig) -> Result<Vec<String>> {
    let c = check_spectral(cfg.stray.n, cfg.stray.length)?;
    let worst = c.round_trip_error.max(c.curl_max).max(c.linearity_error);
    let line = format!(
        "max round-trip error {:e} curl_max={:e} linearity_error={:e}",
        c.round_trip_error, c.curl_max, c.linearity_error
    );
    if worst > STRAY_TOL {
        return Err(Error::InvalidArgument(format!("spectral identities off by {worst:e} > {STRAY_TOL:e}")));
    }
    Ok(vec![line])
}
