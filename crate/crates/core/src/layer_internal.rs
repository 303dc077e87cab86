//! Internal-layer profiles across the interface.
//!
//! For every slow point `x` near the interface the profiles `U+-(t, y)`
//! solve, on the two half-lines of the fast variable `y = x / e`,
//!
//! ```text
//! U_t - U_yy - (u0 + U) x U_yy = F+-(U, U_y)
//! U+ - U- = -(u0+ - u0-),  U+_y = U-_y   at y = 0,
//! ```
//!
//! where `u0+-` are smooth extensions of the two one-sided limit solutions.
//! With `l+ = J e^{-y} / 2`, `l- = -J e^{y} / 2` and `J = u0+ - u0-`, the
//! shifted unknowns `W = U + l` have homogeneous transmission conditions and
//! satisfy
//!
//! ```text
//! W_t - W_yy - (V + W) x W_yy = F(W - l, W_y - l_y) + l_t - l - (V + W) x l
//! ```
//!
//! with `V = u0 - l` (using `l_yy = l`). The nonlinear problem is solved by
//! Picard iteration over linear transmission problems, each marched by
//! Crank-Nicolson with the two half-lines coupled through a junction row.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Side, SlabDomain};
use crate::interp::{fd_weights, lagrange4};
use crate::limit_model::{slab_rate, LimitTrajectory};
use crate::linalg::{linear_fit, BlockTridiagonal};
use crate::strayfield::{slab_stray, MagnetizationField};
use crate::vec3::{cross_matrix, slerp, Mat3, Vec3};

pub const DEFAULT_Y_MAX: f64 = 15.0;
pub const DEFAULT_TAIL_TOL: f64 = 1e-6;
/// Jumps below this size are treated as exactly continuous data.
pub const JUMP_GATE: f64 = 1e-12;

#[inline]
fn side_index(side: Side) -> usize {
    match side {
        Side::Minus => 0,
        Side::Plus => 1,
    }
}

const SIDES: [Side; 2] = [Side::Minus, Side::Plus];

/// `F+-(U, V)`: the zeroth-order layer part of
/// `F(u0 + U, V, H(u0) - (U.n) n) - F(u0, 0, H(u0))`.
pub fn f_pm(u: &Vec3, v: &Vec3, u0: &Vec3, h0: &Vec3, n: &Vec3) -> Vec3 {
    let un = u.dot(n);
    let a = u0 + u;
    let hc = h0 - n * un;
    a * v.norm_squared() + u.cross(h0) - a.cross(n) * un - u.cross(&a.cross(&hc)) - u0.cross(&u.cross(&hc))
        + u0.cross(&u0.cross(n)) * un
}

/// The lift `l` on `side` at distance `s = |y|` from the junction.
#[inline]
pub fn lift(side: Side, jump: &Vec3, s: f64) -> Vec3 {
    jump * (side.sign() * 0.5 * (-s).exp())
}

/// Right side of the shifted profile equation at one point. `wy` is the
/// derivative in `y` (not in `|y|`).
#[allow(clippy::too_many_arguments)]
pub fn f_hat(side: Side, s: f64, w: &Vec3, wy: &Vec3, u0: &Vec3, jump: &Vec3, jump_rate: &Vec3) -> Vec3 {
    let l = lift(side, jump, s);
    let ly = -l * side.sign();
    let lt = lift(side, jump_rate, s);
    let v = u0 - l;
    f_pm(&(w - l), &(wy - ly), u0, &slab_stray(u0), &Vec3::x()) + lt - l - (v + w).cross(&l)
}

/// Nodes `0 = y_0 < ... < y_N = y_max` with widths `h0 r^k`; the last cell
/// absorbs the remainder.
pub fn graded_y_nodes(y_max: f64, h0: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(h0 >= 1e-6 && h0 < y_max) {
        return Err(Error::InvalidArgument(format!("first fast cell {h0} outside [1e-6, {y_max})")));
    }
    if !(ratio >= 1.0 && ratio < 2.0) {
        return Err(Error::InvalidArgument(format!("fast grading ratio {ratio} outside [1, 2)")));
    }
    let mut y = vec![0.0];
    let mut h = h0;
    loop {
        let last = *y.last().unwrap();
        if last + h >= y_max - 0.5 * h {
            y.push(y_max);
            break;
        }
        y.push(last + h);
        h *= ratio;
    }
    if y.len() < 4 {
        return Err(Error::InvalidArgument("fast grid needs at least three cells per side".into()));
    }
    Ok(y)
}

/// Time nodes starting with `dt / 64` and doubling up to `dt`.
pub fn graded_time_nodes(dt: f64, t_end: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(Error::InvalidArgument(format!("profile time step {dt} and horizon {t_end} must be positive")));
    }
    let mut t = vec![0.0];
    let mut h = dt / 64.0;
    let mut first = true;
    while *t.last().unwrap() < t_end - 1e-12 * t_end {
        let last = *t.last().unwrap();
        t.push((last + h).min(t_end));
        if !first {
            h = (2.0 * h).min(dt);
        }
        first = false;
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileGridConfig {
    pub y_max: f64,
    pub h0: f64,
    pub ratio: f64,
    /// Largest time step.
    pub dt: f64,
    pub t_end: f64,
}

impl Default for ProfileGridConfig {
    fn default() -> Self {
        Self { y_max: DEFAULT_Y_MAX, h0: 5e-4, ratio: 1.02, dt: 0.01, t_end: 0.5 }
    }
}

/// Fast-variable, time and slow-parameter grids of the profiles. The fast
/// grid `y` lists distances from the junction; both half-lines use it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileGrid {
    pub config: ProfileGridConfig,
    pub y: Vec<f64>,
    pub t_nodes: Vec<f64>,
    pub x_nodes: Vec<f64>,
}

impl ProfileGrid {
    pub fn new(config: ProfileGridConfig, x_nodes: Vec<f64>) -> Result<Self> {
        let y = graded_y_nodes(config.y_max, config.h0, config.ratio)?;
        let t_nodes = graded_time_nodes(config.dt, config.t_end)?;
        if x_nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("slow nodes must increase".into()));
        }
        Ok(Self { config, y, t_nodes, x_nodes })
    }

    pub fn y_max(&self) -> f64 {
        *self.y.last().unwrap()
    }

    pub fn cells_y_per_side(&self) -> usize {
        self.y.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn nt(&self) -> usize {
        self.t_nodes.len()
    }

    pub fn nx(&self) -> usize {
        self.x_nodes.len()
    }

    pub fn horizon(&self) -> f64 {
        *self.t_nodes.last().unwrap()
    }

    pub fn zeros(&self) -> ProfileField {
        ProfileField::zeros(self.nt(), self.nx(), self.ny())
    }
}

/// Values over `(t, x, side, |y|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileField {
    pub nt: usize,
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<Vec3>,
}

impl ProfileField {
    pub fn zeros(nt: usize, nx: usize, ny: usize) -> Self {
        Self { nt, nx, ny, data: vec![Vec3::zeros(); nt * nx * 2 * ny] }
    }

    #[inline]
    pub fn index(&self, it: usize, ix: usize, side: Side, k: usize) -> usize {
        ((it * self.nx + ix) * 2 + side_index(side)) * self.ny + k
    }

    #[inline]
    pub fn get(&self, it: usize, ix: usize, side: Side, k: usize) -> Vec3 {
        self.data[self.index(it, ix, side, k)]
    }

    pub fn line(&self, it: usize, ix: usize, side: Side) -> &[Vec3] {
        let i = self.index(it, ix, side, 0);
        &self.data[i..i + self.ny]
    }

    pub fn line_mut(&mut self, it: usize, ix: usize, side: Side) -> &mut [Vec3] {
        let i = self.index(it, ix, side, 0);
        &mut self.data[i..i + self.ny]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.amax()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max)
    }
}

/// Smooth extensions `u0+-` of the one-sided limit solutions, sampled on
/// the merged slow nodes at a list of times, with their time derivatives.
#[derive(Debug, Clone)]
pub struct ExtendedLimit {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    /// `[it][ix]`, indexed by side (minus, plus).
    pub values: [Vec<Vec<Vec3>>; 2],
    pub rates: [Vec<Vec<Vec3>>; 2],
    /// True when the data was continuous and the extension is the identity.
    pub continuous: bool,
}

impl ExtendedLimit {
    pub fn value(&self, it: usize, ix: usize, side: Side) -> Vec3 {
        self.values[side_index(side)][it][ix]
    }

    pub fn rate(&self, it: usize, ix: usize, side: Side) -> Vec3 {
        self.rates[side_index(side)][it][ix]
    }

    pub fn jump(&self, it: usize, ix: usize) -> Vec3 {
        self.value(it, ix, Side::Plus) - self.value(it, ix, Side::Minus)
    }

    pub fn jump_rate(&self, it: usize, ix: usize) -> Vec3 {
        self.rate(it, ix, Side::Plus) - self.rate(it, ix, Side::Minus)
    }

    pub fn x_index(&self, x: f64) -> Option<usize> {
        self.x.iter().position(|&v| v == x)
    }
}

/// One-sided value, slope and curvature of a field at the interface.
fn interface_taylor(field: &MagnetizationField, side: Side) -> [Vec3; 3] {
    let (xs, vs): (&[f64], &[Vec3]) = match side {
        Side::Minus => {
            let n = field.values_minus.len();
            (&field.domain.nodes_minus[n - 4..], &field.values_minus[n - 4..])
        }
        Side::Plus => (&field.domain.nodes_plus[..4], &field.values_plus[..4]),
    };
    let w = fd_weights(0.0, xs, 2);
    let mut out = [Vec3::zeros(); 3];
    for (d, o) in out.iter_mut().enumerate() {
        *o = vs.iter().zip(&w[d]).map(|(v, c)| v * *c).sum();
    }
    out[0] = match side {
        Side::Minus => *vs.last().unwrap(),
        Side::Plus => vs[0],
    };
    out
}

/// Applies the extension to one two-sided field; returns `[minus, plus]`
/// sampled on the merged nodes.
fn extend_field(field: &MagnetizationField, identity: bool) -> [Vec<Vec3>; 2] {
    let d: &SlabDomain = &field.domain;
    let n = d.nodes_per_side();
    let merged_x = d.merged_nodes();
    let own = |i: usize, side: Side| -> Vec3 {
        // value of the side's own data at merged index i
        match side {
            Side::Minus => field.values_minus[i],
            Side::Plus => field.values_plus[i + 1 - n],
        }
    };
    let left = interface_taylor(field, Side::Minus);
    let right = interface_taylor(field, Side::Plus);
    let delta = |x: f64| -> Vec3 {
        (right[0] - left[0]) + (right[1] - left[1]) * x + (right[2] - left[2]) * (0.5 * x * x)
    };
    let mut minus = Vec::with_capacity(merged_x.len());
    let mut plus = Vec::with_capacity(merged_x.len());
    for (i, &x) in merged_x.iter().enumerate() {
        let beta = if identity { 0.0 } else { d.level_sets.sigma_blend(x) };
        if i + 1 < n {
            let u = own(i, Side::Minus);
            minus.push(u);
            plus.push(if beta == 0.0 { u } else { u + delta(x) * beta });
        } else if i + 1 == n {
            let (a, b) = (field.values_minus[n - 1], field.values_plus[0]);
            minus.push(a);
            plus.push(b);
        } else {
            let u = own(i, Side::Plus);
            plus.push(u);
            minus.push(if beta == 0.0 { u } else { u - delta(x) * beta });
        }
    }
    [minus, plus]
}

/// Extends the limit solution across the interface at the given times.
///
/// Inside `V_Sigma` the foreign side is the true solution plus a blended
/// second-order Taylor jump, `u0+(x) = u0(x) + b(x) (J + J' x + J'' x^2 / 2)`
/// for `x < 0` and symmetrically for `u0-`, so each extension is C2 across
/// the interface. Continuous data (jump below [`JUMP_GATE`] at all stored
/// times) is returned unchanged on both sides.
pub fn extend_u0_pm(u0: &LimitTrajectory, times: &[f64]) -> ExtendedLimit {
    let continuous = u0.jumps().iter().all(|j| j.amax() <= JUMP_GATE);
    let x = u0.states[0].domain.merged_nodes();
    let mut values: [Vec<Vec<Vec3>>; 2] = [Vec::new(), Vec::new()];
    let mut rates: [Vec<Vec<Vec3>>; 2] = [Vec::new(), Vec::new()];
    for &t in times {
        let state = u0.sample(t);
        let rate = state.map(slab_rate);
        let [vm, vp] = extend_field(&state, continuous);
        let [rm, rp] = extend_field(&rate, continuous);
        values[0].push(vm);
        values[1].push(vp);
        rates[0].push(rm);
        rates[1].push(rp);
    }
    ExtendedLimit { times: times.to_vec(), x, values, rates, continuous }
}

/// Finite-difference operators on the half-line grid.
#[derive(Debug, Clone)]
pub struct HalfLineOperator {
    pub y: Vec<f64>,
    /// Laplacian weights at interior nodes `1..N-1` (index 0 and N unused).
    pub lap: Vec<[f64; 3]>,
    /// First-derivative weights and the start of their three-node window.
    pub der: Vec<(usize, [f64; 3])>,
}

impl HalfLineOperator {
    pub fn new(y: &[f64]) -> Self {
        let n = y.len();
        let mut lap = vec![[0.0; 3]; n];
        let mut der = Vec::with_capacity(n);
        for k in 0..n {
            let start = if k == 0 { 0 } else if k == n - 1 { n - 3 } else { k - 1 };
            let w = fd_weights(y[k], &y[start..start + 3], 2);
            der.push((start, [w[1][0], w[1][1], w[1][2]]));
            if k > 0 && k < n - 1 {
                lap[k] = [w[2][0], w[2][1], w[2][2]];
            }
        }
        Self { y: y.to_vec(), lap, der }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Derivative in `|y|`.
    pub fn ds(&self, w: &[Vec3], k: usize) -> Vec3 {
        let (s, c) = self.der[k];
        w[s] * c[0] + w[s + 1] * c[1] + w[s + 2] * c[2]
    }

    pub fn lap_at(&self, w: &[Vec3], k: usize) -> Vec3 {
        let c = self.lap[k];
        w[k - 1] * c[0] + w[k] * c[1] + w[k + 1] * c[2]
    }

    /// Trapezoid integral of `|w|^2` over the half-line.
    pub fn l2_squared(&self, w: &[Vec3]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.n() - 1 {
            s += 0.5 * (self.y[k + 1] - self.y[k]) * (w[k].norm_squared() + w[k + 1].norm_squared());
        }
        s
    }
}

/// One Crank-Nicolson step of the linear transmission problem
/// `W_t - W_yy - C x W_yy = f` on both half-lines. All arrays are indexed
/// by `[side][k]` with `k` the distance index; `W = 0` at the far ends.
#[derive(Debug, Clone, Copy)]
pub struct TransmissionStep<'a> {
    pub dt: f64,
    pub theta: f64,
    pub w_old: [&'a [Vec3]; 2],
    pub coeff_old: [&'a [Vec3]; 2],
    pub coeff_new: [&'a [Vec3]; 2],
    pub forcing_old: [&'a [Vec3]; 2],
    pub forcing_new: [&'a [Vec3]; 2],
}

#[derive(Debug, Clone)]
pub struct TransmissionResult {
    pub w: [Vec<Vec3>; 2],
    /// `|W+_y - W-_y|` at the junction with the one-sided stencils.
    pub junction_residual: f64,
}

/// `(W+_y - W-_y)(0)` and `W+(0) - W-(0)` for side arrays.
pub fn junction_defects(op: &HalfLineOperator, w: [&[Vec3]; 2]) -> (Vec3, Vec3) {
    let value = w[1][0] - w[0][0];
    // y-derivative is +d/ds on the plus side and -d/ds on the minus side
    let slope = op.ds(w[1], 0) + op.ds(w[0], 0);
    (value, slope)
}

fn continuity_scale(c: [&[Vec3]; 2]) -> f64 {
    (c[1][0] - c[0][0]).amax() / c[0][0].amax().max(1.0)
}

/// Solves one step of the coupled half-line system. Interior rows are the
/// CN discretization; the junction carries one shared unknown (value
/// continuity) and a row equating the one-sided slopes, with the second
/// neighbours eliminated through the adjacent interior rows so that the
/// system stays block tridiagonal.
pub fn solve_transmission_linear(op: &HalfLineOperator, step: &TransmissionStep) -> Result<TransmissionResult> {
    let n = op.n();
    let big_n = n - 1;
    if big_n < 3 {
        return Err(Error::InvalidArgument("transmission solve needs three cells per side".into()));
    }
    for arr in step.w_old.iter().chain(&step.coeff_old).chain(&step.coeff_new).chain(&step.forcing_old).chain(&step.forcing_new) {
        if arr.len() != n {
            return Err(Error::GridMismatch(format!("side array of length {} for {} fast nodes", arr.len(), n)));
        }
    }
    if continuity_scale(step.coeff_new) > 1e-8 || continuity_scale(step.coeff_old) > 1e-8 {
        return Err(Error::InvalidArgument("coefficient is discontinuous at the junction".into()));
    }
    let (th, dt) = (step.theta, step.dt);
    let id = Mat3::identity();
    let size = 2 * big_n - 1;
    let mut sys = BlockTridiagonal::zeros(size);
    let mut rhs = vec![Vec3::zeros(); size];
    // rows adjacent to the junction, kept for the elimination
    let mut first: [(Mat3, Mat3, Mat3, Vec3); 2] = [(id, id, id, Vec3::zeros()); 2];
    for side in 0..2 {
        let w = step.w_old[side];
        for k in 1..big_n {
            let m_new = id + cross_matrix(&step.coeff_new[side][k]);
            let m_old = id + cross_matrix(&step.coeff_old[side][k]);
            let [a, b, c] = op.lap[k];
            let towards = m_new * (-th * dt * a);
            let diag = id - m_new * (th * dt * b);
            let away = m_new * (-th * dt * c);
            let r = w[k]
                + m_old * op.lap_at(w, k) * ((1.0 - th) * dt)
                + (step.forcing_new[side][k] * th + step.forcing_old[side][k] * (1.0 - th)) * dt;
            if k == 1 {
                first[side] = (towards, diag, away, r);
            }
            if side == 1 {
                let row = big_n - 1 + k;
                sys.lower[row] = towards;
                sys.diag[row] = diag;
                sys.upper[row] = if k + 1 < big_n { away } else { Mat3::zeros() };
                rhs[row] = r;
            } else {
                let row = big_n - 1 - k;
                sys.upper[row] = towards;
                sys.diag[row] = diag;
                sys.lower[row] = if k + 1 < big_n { away } else { Mat3::zeros() };
                rhs[row] = r;
            }
        }
    }
    let (_, d) = op.der[0];
    let mut jdiag = id * (2.0 * d[0]);
    let mut jrhs = Vec3::zeros();
    let mut neighbour = [Mat3::zeros(); 2];
    for side in 0..2 {
        let (towards, diag, away, r) = first[side];
        let g = away.try_inverse().ok_or_else(|| Error::SingularSystem {
            row: big_n - 1,
            detail: "junction elimination block is singular".into(),
        })?;
        jdiag -= g * towards * d[2];
        neighbour[side] = id * d[1] - g * diag * d[2];
        jrhs -= g * r * d[2];
    }
    let j = big_n - 1;
    sys.diag[j] = jdiag;
    sys.lower[j] = neighbour[0];
    sys.upper[j] = neighbour[1];
    rhs[j] = jrhs;
    sys.solve(&mut rhs)?;

    let mut out = [vec![Vec3::zeros(); n], vec![Vec3::zeros(); n]];
    for k in 0..big_n {
        out[1][k] = rhs[big_n - 1 + k];
        out[0][k] = rhs[big_n - 1 - k];
    }
    let (_, slope) = junction_defects(op, [&out[0], &out[1]]);
    Ok(TransmissionResult { junction_residual: slope.norm(), w: out })
}

/// Side arrays at every time node.
pub type SideSeries = Vec<[Vec<Vec3>; 2]>;

/// Marches the linear transmission problem over `times` from `w0`, with
/// coefficient and forcing given at every time node.
pub fn march_transmission(
    op: &HalfLineOperator,
    times: &[f64],
    coeff: &SideSeries,
    forcing: &SideSeries,
    w0: [Vec<Vec3>; 2],
) -> Result<SideSeries> {
    let mut out: SideSeries = Vec::with_capacity(times.len());
    let mut w0 = w0;
    let last = op.n() - 1;
    w0[0][last] = Vec3::zeros();
    w0[1][last] = Vec3::zeros();
    out.push(w0);
    for it in 1..times.len() {
        let prev = &out[it - 1];
        let step = TransmissionStep {
            dt: times[it] - times[it - 1],
            theta: 0.5,
            w_old: [&prev[0], &prev[1]],
            coeff_old: [&coeff[it - 1][0], &coeff[it - 1][1]],
            coeff_new: [&coeff[it][0], &coeff[it][1]],
            forcing_old: [&forcing[it - 1][0], &forcing[it - 1][1]],
            forcing_new: [&forcing[it][0], &forcing[it][1]],
        };
        let res = solve_transmission_linear(op, &step)?;
        out.push(res.w);
    }
    Ok(out)
}

/// Discrete `W_t - W_yy - C x W_yy` of a time series on one half-line,
/// at the midpoints of consecutive time nodes, consistent with the CN
/// march. The end nodes of the fast grid are left at zero.
pub fn l_apply(op: &HalfLineOperator, coeff: &[Vec<Vec3>], w: &[Vec<Vec3>], times: &[f64]) -> Vec<Vec<Vec3>> {
    let n = op.n();
    (0..times.len() - 1)
        .map(|it| {
            let dt = times[it + 1] - times[it];
            let mut out = vec![Vec3::zeros(); n];
            for (k, o) in out.iter_mut().enumerate().take(n - 1).skip(1) {
                let mut ell = (w[it + 1][k] - w[it][k]) / dt;
                for l in [it, it + 1] {
                    let lap = op.lap_at(&w[l], k);
                    ell -= (lap + coeff[l][k].cross(&lap)) * 0.5;
                }
                *o = ell;
            }
            out
        })
        .collect()
}

/// Initial profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialProfile {
    /// Great-circle transition `slerp(u0-, u0+, s(y))` with
    /// `s = 1 - e^{-y}/2` for `y > 0` and `e^{y}/2` for `y < 0`; unit length
    /// and C1 across the junction.
    Slerp,
    /// `W = 0`, i.e. `U = -l`.
    Lift,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub initial: InitialProfile,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 30, initial: InitialProfile::Slerp }
    }
}

/// Distances `sup_t |W^{k+1} - W^k|_{L2}` (maximum over slow nodes).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PicardTrace {
    pub distances: Vec<f64>,
}

impl PicardTrace {
    pub fn ratios(&self) -> Vec<f64> {
        self.distances.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// The internal-layer profiles `U+-`.
#[derive(Debug, Clone)]
pub struct ProfilePair {
    pub grid: Arc<ProfileGrid>,
    pub u: ProfileField,
    /// `u0+-` at `(t, x)`, indexed `[it * nx + ix][side]`.
    pub background: Vec<[Vec3; 2]>,
    /// Exponential tail rate fitted on `|y| in [2, 10]`; infinite for
    /// identically vanishing profiles.
    pub decay_rate: f64,
}

/// Profiles in the shifted unknowns `W = U + l`.
#[derive(Debug, Clone)]
pub struct LiftedPair {
    pub grid: Arc<ProfileGrid>,
    pub w: ProfileField,
    pub background: Vec<[Vec3; 2]>,
}

impl ProfilePair {
    pub fn jump(&self, it: usize, ix: usize) -> Vec3 {
        let b = self.background[it * self.grid.nx() + ix];
        b[1] - b[0]
    }

    pub fn lifted(&self) -> LiftedPair {
        let g = &self.grid;
        let mut w = self.u.clone();
        for it in 0..g.nt() {
            for ix in 0..g.nx() {
                let j = self.jump(it, ix);
                for side in SIDES {
                    for (k, v) in w.line_mut(it, ix, side).iter_mut().enumerate() {
                        *v += lift(side, &j, g.y[k]);
                    }
                }
            }
        }
        LiftedPair { grid: g.clone(), w, background: self.background.clone() }
    }

    /// Largest `|U+ - U- + J|` and `|U+_y - U-_y|` at the junction.
    pub fn transmission_residuals(&self) -> (f64, f64) {
        let g = &self.grid;
        let op = HalfLineOperator::new(&g.y);
        let (mut value, mut slope) = (0.0f64, 0.0f64);
        for it in 0..g.nt() {
            for ix in 0..g.nx() {
                let (v, s) = junction_defects(&op, [self.u.line(it, ix, Side::Minus), self.u.line(it, ix, Side::Plus)]);
                value = value.max((v + self.jump(it, ix)).amax());
                slope = slope.max(s.amax());
            }
        }
        (value, slope)
    }

    /// Largest `|U|` at `|y| = Y`.
    pub fn tail(&self) -> f64 {
        let g = &self.grid;
        let last = g.ny() - 1;
        let mut m = 0.0f64;
        for it in 0..g.nt() {
            for ix in 0..g.nx() {
                for side in SIDES {
                    m = m.max(self.u.get(it, ix, side, last).norm());
                }
            }
        }
        m
    }

    /// `U_side(t, x, y)` by four-point interpolation in each variable; zero
    /// beyond the truncation and outside the stored slow window.
    pub fn sample(&self, side: Side, t: f64, x: f64, y: f64) -> Vec3 {
        let g = &self.grid;
        let s = y.abs();
        if s > g.y_max() || x < g.x_nodes[0] || x > *g.x_nodes.last().unwrap() {
            return Vec3::zeros();
        }
        let (t0, wt, nt) = lagrange4(&g.t_nodes, t);
        let (x0, wx, nx) = lagrange4(&g.x_nodes, x);
        let (y0, wy, ny) = lagrange4(&g.y, s);
        let mut acc = Vec3::zeros();
        for a in 0..nt {
            for b in 0..nx {
                let line = self.u.line(t0 + a, x0 + b, side);
                let mut inner = Vec3::zeros();
                for c in 0..ny {
                    inner += line[y0 + c] * wy[c];
                }
                acc += inner * (wt[a] * wx[b]);
            }
        }
        acc
    }
}

impl LiftedPair {
    pub fn jump(&self, it: usize, ix: usize) -> Vec3 {
        let b = self.background[it * self.grid.nx() + ix];
        b[1] - b[0]
    }

    /// The lifting background `V = u0 - l`.
    pub fn v(&self, it: usize, ix: usize, side: Side, k: usize) -> Vec3 {
        let b = self.background[it * self.grid.nx() + ix][side_index(side)];
        b - lift(side, &self.jump(it, ix), self.grid.y[k])
    }

    pub fn profiles(&self) -> ProfileField {
        let g = &self.grid;
        let mut u = self.w.clone();
        for it in 0..g.nt() {
            for ix in 0..g.nx() {
                let j = self.jump(it, ix);
                for side in SIDES {
                    for (k, v) in u.line_mut(it, ix, side).iter_mut().enumerate() {
                        *v -= lift(side, &j, g.y[k]);
                    }
                }
            }
        }
        u
    }
}

/// Data of the profile problem at one slow node.
struct NodeProblem<'a> {
    op: &'a HalfLineOperator,
    times: &'a [f64],
    u0: Vec<[Vec3; 2]>,
    jump: Vec<Vec3>,
    jump_rate: Vec<Vec3>,
    w_init: [Vec<Vec3>; 2],
}

impl NodeProblem<'_> {
    fn is_trivial(&self) -> bool {
        self.jump.iter().all(|j| j.amax() == 0.0) && self.w_init.iter().flatten().all(|v| v.amax() == 0.0)
    }

    /// One Picard update `W^{k+1}` from `W^k`.
    fn update(&self, prev: &SideSeries) -> Result<SideSeries> {
        let op = self.op;
        let n = op.n();
        let mut coeff: SideSeries = Vec::with_capacity(self.times.len());
        let mut forcing: SideSeries = Vec::with_capacity(self.times.len());
        for it in 0..self.times.len() {
            let mut c = [vec![Vec3::zeros(); n], vec![Vec3::zeros(); n]];
            let mut f = [vec![Vec3::zeros(); n], vec![Vec3::zeros(); n]];
            for side in SIDES {
                let si = side_index(side);
                let w = &prev[it][si];
                let u0 = self.u0[it][si];
                for k in 0..n {
                    let s = op.y[k];
                    let l = lift(side, &self.jump[it], s);
                    c[si][k] = u0 - l + w[k];
                    let wy = op.ds(w, k) * side.sign();
                    f[si][k] = f_hat(side, s, &w[k], &wy, &u0, &self.jump[it], &self.jump_rate[it]);
                }
            }
            coeff.push(c);
            forcing.push(f);
        }
        march_transmission(op, self.times, &coeff, &forcing, self.w_init.clone())
    }

    fn distance(&self, a: &SideSeries, b: &SideSeries) -> f64 {
        a.iter()
            .zip(b)
            .map(|(p, q)| {
                let mut s = 0.0;
                for side in 0..2 {
                    let d: Vec<Vec3> = p[side].iter().zip(&q[side]).map(|(u, v)| u - v).collect();
                    s += self.op.l2_squared(&d);
                }
                s.sqrt()
            })
            .fold(0.0, f64::max)
    }
}

fn initial_w(initial: InitialProfile, y: &[f64], u0m: &Vec3, u0p: &Vec3) -> [Vec<Vec3>; 2] {
    let jump = u0p - u0m;
    let mut out = [vec![Vec3::zeros(); y.len()], vec![Vec3::zeros(); y.len()]];
    if jump.amax() == 0.0 {
        return out;
    }
    for side in SIDES {
        let si = side_index(side);
        for (k, &s) in y.iter().enumerate() {
            let u = match initial {
                InitialProfile::Lift => -lift(side, &jump, s),
                InitialProfile::Slerp => {
                    let e = 0.5 * (-s).exp();
                    match side {
                        Side::Plus => slerp(u0m, u0p, 1.0 - e) - u0p,
                        Side::Minus => slerp(u0m, u0p, e) - u0m,
                    }
                }
            };
            out[si][k] = u + lift(side, &jump, s);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub profiles: ProfilePair,
    pub trace: PicardTrace,
    pub converged: bool,
}

/// Slow nodes of the profile window: every merged node with
/// `|x| <= halfwidth` plus two further nodes on each side (kept at zero so
/// interpolation fades out smoothly).
pub fn profile_window(x: &[f64], halfwidth: f64) -> Vec<f64> {
    let inside: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() <= halfwidth).collect();
    let (Some(&a), Some(&b)) = (inside.first(), inside.last()) else {
        return Vec::new();
    };
    let lo = a.saturating_sub(2);
    let hi = (b + 2).min(x.len() - 1);
    x[lo..=hi].to_vec()
}

/// Picard iteration for the profiles, seeded with `W = 0`. Each iterate
/// solves the linear transmission problem with coefficient `V + W^k` and
/// forcing `F_hat(W^k)` from the initial profile. Stops when the distance
/// between iterates falls below `tol`; three consecutive non-decreasing
/// distances abort with [`Error::NonContraction`].
pub fn picard_profiles(u0_pm: &ExtendedLimit, grid: Arc<ProfileGrid>, cfg: &PicardConfig) -> Result<PicardOutcome> {
    if !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return Err(Error::InvalidArgument("picard tolerance and iteration cap must be positive".into()));
    }
    if grid.t_nodes != u0_pm.times {
        return Err(Error::GridMismatch("profile time nodes differ from the extension's".into()));
    }
    let xi: Vec<usize> = grid
        .x_nodes
        .iter()
        .map(|&x| u0_pm.x_index(x).ok_or_else(|| Error::GridMismatch(format!("slow node {x} not in the limit grid"))))
        .collect::<Result<_>>()?;
    let op = HalfLineOperator::new(&grid.y);
    let nt = grid.nt();
    let background: Vec<[Vec3; 2]> = (0..nt)
        .flat_map(|it| xi.iter().map(move |&i| (it, i)))
        .map(|(it, i)| [u0_pm.value(it, i, Side::Minus), u0_pm.value(it, i, Side::Plus)])
        .collect();

    let problems: Vec<Option<NodeProblem>> = grid
        .x_nodes
        .iter()
        .zip(&xi)
        .map(|(_, &i)| {
            let u0: Vec<[Vec3; 2]> =
                (0..nt).map(|it| [u0_pm.value(it, i, Side::Minus), u0_pm.value(it, i, Side::Plus)]).collect();
            let jump: Vec<Vec3> = (0..nt).map(|it| u0_pm.jump(it, i)).collect();
            let jump_rate: Vec<Vec3> = (0..nt).map(|it| u0_pm.jump_rate(it, i)).collect();
            let w_init = initial_w(cfg.initial, &grid.y, &u0[0][0], &u0[0][1]);
            let p = NodeProblem { op: &op, times: &grid.t_nodes, u0, jump, jump_rate, w_init };
            if p.is_trivial() {
                None
            } else {
                Some(p)
            }
        })
        .collect();

    let zero_series = || -> SideSeries { vec![[vec![Vec3::zeros(); op.n()], vec![Vec3::zeros(); op.n()]]; nt] };
    let mut iterates: Vec<SideSeries> = problems.iter().map(|_| zero_series()).collect();
    let mut trace = PicardTrace::default();
    let mut converged = false;
    let mut rising = 0;
    for nu in 0..cfg.max_iter {
        let updated: Vec<Result<(SideSeries, f64)>> = problems
            .par_iter()
            .zip(iterates.par_iter())
            .map(|(p, prev)| match p {
                None => Ok((prev.clone(), 0.0)),
                Some(p) => {
                    let next = p.update(prev)?;
                    let d = p.distance(&next, prev);
                    Ok((next, d))
                }
            })
            .collect();
        let mut dist: f64 = 0.0;
        for (slot, r) in iterates.iter_mut().zip(updated) {
            let (next, d) = r?;
            *slot = next;
            dist = dist.max(d);
        }
        if !dist.is_finite() {
            return Err(Error::NonContraction { iterate: nu + 1, horizon: grid.horizon() });
        }
        if let Some(&last) = trace.distances.last() {
            if dist >= last {
                rising += 1;
            } else {
                rising = 0;
            }
        }
        trace.distances.push(dist);
        if dist < cfg.tol {
            converged = true;
            break;
        }
        if rising >= 3 {
            return Err(Error::NonContraction { iterate: nu + 1, horizon: grid.horizon() });
        }
    }

    let mut w = grid.zeros();
    for (ix, series) in iterates.iter().enumerate() {
        for (it, sides) in series.iter().enumerate() {
            for side in SIDES {
                w.line_mut(it, ix, side).copy_from_slice(&sides[side_index(side)]);
            }
        }
    }
    let lifted = LiftedPair { grid: grid.clone(), w, background: background.clone() };
    let u = lifted.profiles();
    let mut profiles = ProfilePair { grid, u, background, decay_rate: f64::INFINITY };
    profiles.decay_rate = fit_decay_rate(&profiles);
    Ok(PicardOutcome { profiles, trace, converged })
}

/// Exponential rate from a least-squares fit of `ln max_{t,x} |U|` against
/// `|y|` on `[2, 10]`, minimum over the two sides.
pub fn fit_decay_rate(p: &ProfilePair) -> f64 {
    let g = &p.grid;
    let mut rate = f64::INFINITY;
    for side in SIDES {
        let mut ys = Vec::new();
        let mut ls = Vec::new();
        for (k, &s) in g.y.iter().enumerate() {
            if !(2.0..=10.0).contains(&s) {
                continue;
            }
            let mut m = 0.0f64;
            for it in 0..g.nt() {
                for ix in 0..g.nx() {
                    m = m.max(p.u.get(it, ix, side, k).norm());
                }
            }
            if m > 1e-300 {
                ys.push(s);
                ls.push(m.ln());
            }
        }
        if ys.len() >= 2 {
            let (slope, _) = linear_fit(&ys, &ls);
            rate = rate.min(-slope);
        }
    }
    rate
}

/// Trapezoid weights on nonuniform nodes.
fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| {
            let left = if i > 0 { x[i] - x[i - 1] } else { 0.0 };
            let right = if i + 1 < n { x[i + 1] - x[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Second-order first-derivative along one axis of a nonuniform grid.
fn derivative_weights(x: &[f64]) -> Vec<(usize, [f64; 3])> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let start = if k == 0 { 0 } else if k == n - 1 { n - 3 } else { k - 1 };
            let w = fd_weights(x[k], &x[start..start + 3], 1);
            (start, [w[1][0], w[1][1], w[1][2]])
        })
        .collect()
}

#[derive(Clone, Copy)]
enum Axis {
    T,
    X,
    Y,
}

/// Scalar-free helper: differentiates a `[t][x][side][y]` field along one
/// axis. The `y` derivative is in `y` itself (sign-adjusted per side).
fn differentiate(f: &ProfileField, grid: &ProfileGrid, axis: Axis) -> ProfileField {
    let mut out = f.clone();
    let (wt, wx, wy) = (derivative_weights(&grid.t_nodes), derivative_weights(&grid.x_nodes), derivative_weights(&grid.y));
    for it in 0..f.nt {
        for ix in 0..f.nx {
            for side in SIDES {
                for k in 0..f.ny {
                    let v = match axis {
                        Axis::T => {
                            let (s, c) = wt[it];
                            (0..3).map(|q| f.get(s + q, ix, side, k) * c[q]).sum::<Vec3>()
                        }
                        Axis::X => {
                            let (s, c) = wx[ix];
                            (0..3).map(|q| f.get(it, s + q, side, k) * c[q]).sum::<Vec3>()
                        }
                        Axis::Y => {
                            let (s, c) = wy[k];
                            (0..3).map(|q| f.get(it, ix, side, s + q) * c[q]).sum::<Vec3>() * side.sign()
                        }
                    };
                    let i = out.index(it, ix, side, k);
                    out.data[i] = v;
                }
            }
        }
    }
    out
}

/// Discrete `|y^k W|_{m, lambda, T}`: the `e^{-lambda t}`-weighted
/// `L2((0,T) x X x R)` norm of all `(t, x, y)` derivatives of `y^k W` up to
/// order `m`, summed in quadrature, with trapezoid quadrature on the stored
/// grids (`X` is the slow window of the grid).
pub fn weighted_profile_norm(w: &ProfileField, grid: &ProfileGrid, m: usize, lambda: f64, k: u32) -> Result<f64> {
    if m > 2 {
        return Err(Error::InvalidArgument(format!("derivative order {m} > 2")));
    }
    if !(lambda >= 1.0) {
        return Err(Error::InvalidArgument(format!("weight lambda = {lambda} < 1")));
    }
    if w.nt != grid.nt() || w.nx != grid.nx() || w.ny != grid.ny() {
        return Err(Error::GridMismatch("profile field does not match its grid".into()));
    }
    let mut base = w.clone();
    for it in 0..w.nt {
        for ix in 0..w.nx {
            for side in SIDES {
                for (kk, v) in base.line_mut(it, ix, side).iter_mut().enumerate() {
                    *v *= grid.y[kk].powi(k as i32);
                }
            }
        }
    }
    let mut fields = vec![base];
    let mut frontier = vec![(fields[0].clone(), 0usize)];
    for _ in 0..m {
        let mut next = Vec::new();
        for (f, last_axis) in &frontier {
            // unordered multi-indices: differentiate along axes >= the last one
            for (ai, axis) in [Axis::T, Axis::X, Axis::Y].into_iter().enumerate() {
                if ai < *last_axis || (matches!(axis, Axis::X) && grid.nx() < 3) {
                    continue;
                }
                let d = differentiate(f, grid, axis);
                fields.push(d.clone());
                next.push((d, ai));
            }
        }
        frontier = next;
    }
    let (qt, qx, qy) = (trapezoid_weights(&grid.t_nodes), trapezoid_weights(&grid.x_nodes), trapezoid_weights(&grid.y));
    let mut total = 0.0;
    for f in &fields {
        for it in 0..f.nt {
            let wt = qt[it] * (-2.0 * lambda * grid.t_nodes[it]).exp();
            for ix in 0..f.nx {
                for side in SIDES {
                    let line = f.line(it, ix, side);
                    let s: f64 = line.iter().zip(&qy).map(|(v, q)| v.norm_squared() * q).sum();
                    total += wt * qx[ix] * s;
                }
            }
        }
    }
    Ok(total.sqrt())
}

/// Full profile construction from a limit trajectory: extension on the
/// graded time nodes, slow window around the interface, Picard iteration.
pub fn build_profiles(u0: &LimitTrajectory, grid_cfg: &ProfileGridConfig, cfg: &PicardConfig) -> Result<PicardOutcome> {
    let t_nodes = graded_time_nodes(grid_cfg.dt, grid_cfg.t_end)?;
    if *t_nodes.last().unwrap() > u0.horizon() + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "profile horizon {} exceeds the limit trajectory horizon {}",
            grid_cfg.t_end,
            u0.horizon()
        )));
    }
    let ext = extend_u0_pm(u0, &t_nodes);
    let domain = &u0.states[0].domain;
    let window = profile_window(&ext.x, domain.level_sets.v_sigma_halfwidth);
    let grid = Arc::new(ProfileGrid::new(grid_cfg.clone(), window)?);
    picard_profiles(&ext, grid, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::full_model::f_rhs;
    use crate::geometry::{build_domain, DomainConfig};
    use crate::limit_model::integrate_limit;
    use crate::vec3::vec3;

    #[test]
    fn f_pm_vanishes_without_layer() {
        let u0 = vec3(0.6, 0.8, 0.0);
        let h0 = slab_stray(&u0);
        let n = Vec3::x();
        assert_eq!(f_pm(&Vec3::zeros(), &Vec3::zeros(), &u0, &h0, &n), Vec3::zeros());
        let u = vec3(0.0, 0.3, -0.2);
        assert!(f_pm(&u, &Vec3::zeros(), &u0, &Vec3::zeros(), &n).norm() < 1e-16);
    }

    #[test]
    fn f_pm_matches_direct_difference() {
        let mut state: u64 = 0x9e3779b97f4a7c15;
        let mut rnd = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..100 {
            let u = vec3(rnd(), rnd(), rnd());
            let v = vec3(rnd(), rnd(), rnd());
            let u0 = vec3(rnd(), rnd(), rnd());
            let h0 = vec3(rnd(), rnd(), rnd());
            let n = vec3(rnd(), rnd(), rnd()).normalize();
            let direct = f_rhs(&(u0 + u), &v, &(h0 - n * u.dot(&n))) - f_rhs(&u0, &Vec3::zeros(), &h0);
            assert!((direct - f_pm(&u, &v, &u0, &h0, &n)).norm() < 1e-12);
        }
    }

    #[test]
    fn graded_grids() {
        let y = graded_y_nodes(15.0, 0.01, 1.02).unwrap();
        assert_eq!(y[0], 0.0);
        assert_eq!(*y.last().unwrap(), 15.0);
        assert!((y[1] - 0.01).abs() < 1e-15);
        let t = graded_time_nodes(0.01, 0.05).unwrap();
        assert!((t[1] - 0.01 / 64.0).abs() < 1e-16);
        assert!((t[7] - 0.01).abs() < 1e-15);
        assert!((t.last().unwrap() - 0.05).abs() < 1e-15);
        // halving Y keeps the shared nodes
        let y2 = graded_y_nodes(7.5, 0.01, 1.02).unwrap();
        assert!(y2.iter().zip(&y).take(y2.len() - 2).all(|(a, b)| a == b));
    }

    fn jump_limit(t_end: f64) -> LimitTrajectory {
        let d = Arc::new(build_domain(DomainConfig::uniform(32)).unwrap());
        let u = MagnetizationField::from_fn(d, 0.0, |s, _| match s {
            Side::Minus => vec3(0.6, 0.8, 0.0),
            Side::Plus => vec3(-0.6, 0.8, 0.0),
        });
        integrate_limit(&u, t_end, 1e-3).unwrap()
    }

    #[test]
    fn extension_blends_constants() {
        let tr = jump_limit(0.1);
        let ext = extend_u0_pm(&tr, &[0.0]);
        assert!(!ext.continuous);
        for (i, &x) in ext.x.iter().enumerate() {
            let p = ext.value(0, i, Side::Plus);
            let m = ext.value(0, i, Side::Minus);
            if x >= 0.0 {
                assert!((p - vec3(-0.6, 0.8, 0.0)).norm() < 1e-14);
            }
            if x <= 0.0 {
                assert!((m - vec3(0.6, 0.8, 0.0)).norm() < 1e-14);
            }
            if x.abs() >= 0.35 {
                assert!((p - m).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn continuous_data_extends_to_itself() {
        let d = Arc::new(build_domain(DomainConfig::uniform(16)).unwrap());
        let u = MagnetizationField::from_fn(d, 0.0, |_, x| vec3(0.6 + 0.3 * x, 0.8, 0.2 * x * x).normalize());
        let tr = integrate_limit(&u, 0.1, 1e-2).unwrap();
        let ext = extend_u0_pm(&tr, &[0.0, 0.05]);
        assert!(ext.continuous);
        for it in 0..2 {
            for i in 0..ext.x.len() {
                assert_eq!(ext.jump(it, i), Vec3::zeros());
            }
        }
    }

    #[test]
    fn l_apply_examples() {
        let y = graded_y_nodes(10.0, 0.005, 1.01).unwrap();
        let op = HalfLineOperator::new(&y);
        let a = vec3(0.0, 1.0, 0.0);
        let w: Vec<Vec3> = y.iter().map(|s| a * (-s).exp()).collect();
        let times = [0.0, 0.1];
        let zero = vec![Vec3::zeros(); y.len()];
        let r = l_apply(&op, &[zero.clone(), zero], &[w.clone(), w.clone()], &times);
        // the merged last cell is irregular; check the smoothly graded part
        for k in 1..y.len() - 2 {
            assert!((r[0][k] + w[k]).norm() < 1e-3 * (-y[k]).exp() + 1e-12);
        }
        let e1 = vec![Vec3::x(); y.len()];
        let r = l_apply(&op, &[e1.clone(), e1], &[w.clone(), w.clone()], &times);
        for k in 1..y.len() - 2 {
            let expect = -vec3(0.0, 1.0, 1.0) * (-y[k]).exp();
            assert!((r[0][k] - expect).norm() < 2e-3 * (-y[k]).exp() + 1e-12);
        }
        let c: Vec<Vec3> = vec![vec3(0.3, 0.1, 0.2); y.len()];
        let r = l_apply(&op, &[c.clone(), c], &[vec![a; y.len()], vec![a; y.len()]], &times);
        assert!(r[0].iter().all(|v| v.norm() < 1e-9));
    }

    #[test]
    fn zero_data_gives_zero_step() {
        let y = graded_y_nodes(8.0, 0.05, 1.05).unwrap();
        let op = HalfLineOperator::new(&y);
        let z = vec![Vec3::zeros(); y.len()];
        let c = vec![vec3(0.2, 0.5, -0.1); y.len()];
        let step = TransmissionStep {
            dt: 0.01,
            theta: 0.5,
            w_old: [&z, &z],
            coeff_old: [&c, &c],
            coeff_new: [&c, &c],
            forcing_old: [&z, &z],
            forcing_new: [&z, &z],
        };
        let r = solve_transmission_linear(&op, &step).unwrap();
        assert!(r.w.iter().flatten().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn discontinuous_coefficient_rejected() {
        let y = graded_y_nodes(8.0, 0.05, 1.05).unwrap();
        let op = HalfLineOperator::new(&y);
        let z = vec![Vec3::zeros(); y.len()];
        let c1 = vec![vec3(0.2, 0.5, -0.1); y.len()];
        let c2 = vec![vec3(0.3, 0.5, -0.1); y.len()];
        let step = TransmissionStep {
            dt: 0.01,
            theta: 0.5,
            w_old: [&z, &z],
            coeff_old: [&c1, &c2],
            coeff_new: [&c1, &c2],
            forcing_old: [&z, &z],
            forcing_new: [&z, &z],
        };
        assert!(solve_transmission_linear(&op, &step).is_err());
    }

    #[test]
    fn window_pads_two_nodes() {
        let x: Vec<f64> = (0..=20).map(|i| -1.0 + 0.1 * i as f64).collect();
        let w = profile_window(&x, 0.35);
        assert!((w[0] + 0.5).abs() < 1e-12 && (w.last().unwrap() - 0.5).abs() < 1e-12);
    }
}
