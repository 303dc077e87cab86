//! Quasi-static stray field: the exact slab operator, the layer
//! correction, and a periodic spectral solver of `curl H = 0`,
//! `div (H + m) = 0`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::geometry::{Side, SlabDomain};
use crate::vec3::Vec3;

/// Default tolerance on `||u| - 1|` for fields flagged as on-sphere.
pub const TOL_UNIT: f64 = 1e-8;

/// Samples of a 3-vector field on both halves of the slab. The interface
/// is stored once per side so the field may jump across it.
#[derive(Debug, Clone)]
pub struct MagnetizationField {
    pub domain: Arc<SlabDomain>,
    pub values_minus: Vec<Vec3>,
    pub values_plus: Vec<Vec3>,
    pub time: f64,
}

/// Stray fields share the layout of magnetizations.
pub type StrayField = MagnetizationField;

impl MagnetizationField {
    pub fn from_fn(domain: Arc<SlabDomain>, time: f64, mut f: impl FnMut(Side, f64) -> Vec3) -> Self {
        let values_minus = domain.nodes_minus.iter().map(|&x| f(Side::Minus, x)).collect();
        let values_plus = domain.nodes_plus.iter().map(|&x| f(Side::Plus, x)).collect();
        Self { domain, values_minus, values_plus, time }
    }

    pub fn constant(domain: Arc<SlabDomain>, value: Vec3) -> Self {
        Self::from_fn(domain, 0.0, |_, _| value)
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn values(&self, side: Side) -> &[Vec3] {
        match side {
            Side::Minus => &self.values_minus,
            Side::Plus => &self.values_plus,
        }
    }

    pub fn values_mut(&mut self, side: Side) -> &mut [Vec3] {
        match side {
            Side::Minus => &mut self.values_minus,
            Side::Plus => &mut self.values_plus,
        }
    }

    /// Value just left and right of the interface.
    pub fn interface_values(&self) -> (Vec3, Vec3) {
        (*self.values_minus.last().unwrap(), self.values_plus[0])
    }

    pub fn interface_jump(&self) -> Vec3 {
        let (m, p) = self.interface_values();
        p - m
    }

    pub fn map(&self, mut f: impl FnMut(&Vec3) -> Vec3) -> Self {
        Self {
            domain: self.domain.clone(),
            values_minus: self.values_minus.iter().map(&mut f).collect(),
            values_plus: self.values_plus.iter().map(&mut f).collect(),
            time: self.time,
        }
    }

    pub fn zip_map(&self, other: &Self, mut f: impl FnMut(&Vec3, &Vec3) -> Vec3) -> Self {
        Self {
            domain: self.domain.clone(),
            values_minus: self.values_minus.iter().zip(&other.values_minus).map(|(a, b)| f(a, b)).collect(),
            values_plus: self.values_plus.iter().zip(&other.values_plus).map(|(a, b)| f(a, b)).collect(),
            time: self.time,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec3> {
        self.values_minus.iter().chain(self.values_plus.iter())
    }

    /// Largest deviation of `|u|` from one.
    pub fn max_norm_defect(&self) -> f64 {
        self.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn is_on_sphere(&self, tol: f64) -> bool {
        self.max_norm_defect() <= tol
    }

    /// Single-valued nodal vector of the whole slab; the two interface
    /// samples are averaged.
    pub fn merged(&self) -> Vec<Vec3> {
        let n = self.values_minus.len();
        let mut v = Vec::with_capacity(2 * n - 1);
        v.extend_from_slice(&self.values_minus[..n - 1]);
        v.push((self.values_minus[n - 1] + self.values_plus[0]) * 0.5);
        v.extend_from_slice(&self.values_plus[1..]);
        v
    }

    /// Inverse of [`merged`](Self::merged): both interface samples get the
    /// shared value.
    pub fn from_merged(domain: Arc<SlabDomain>, time: f64, merged: &[Vec3]) -> Result<Self> {
        let n = domain.nodes_minus.len();
        if merged.len() != 2 * n - 1 {
            return Err(Error::GridMismatch(format!("{} merged values for {} nodes per side", merged.len(), n)));
        }
        Ok(Self {
            values_minus: merged[..n].to_vec(),
            values_plus: merged[n - 1..].to_vec(),
            domain,
            time,
        })
    }
}

/// Exact stray field of the slab: `H = (-u_1, 0, 0)`, applied pointwise on
/// each side.
pub fn stray_field_1d(u: &MagnetizationField) -> StrayField {
    u.map(slab_stray)
}

#[inline]
pub fn slab_stray(v: &Vec3) -> Vec3 {
    Vec3::new(-v.x, 0.0, 0.0)
}

/// Stray-field change produced by a layer of amplitude `u` across a surface
/// with unit normal `n`: `-(u . n) n`.
#[inline]
pub fn layer_strayfield_correction(u: &Vec3, n: &Vec3) -> Vec3 {
    -n * u.dot(n)
}

/// Periodic 3-vector field on an `n^3` grid of a cube of side `length`.
/// Index `(i, j, k)` maps to `(i * n + j) * n + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    pub n: usize,
    pub length: f64,
    pub data: Vec<Vec3>,
}

impl PeriodicField {
    pub fn from_fn(n: usize, length: f64, f: impl Fn([f64; 3]) -> Vec3) -> Self {
        let h = length / n as f64;
        let mut data = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    data.push(f([i as f64 * h, j as f64 * h, k as f64 * h]));
                }
            }
        }
        Self { n, length, data }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.amax()).fold(0.0, f64::max)
    }
}

fn check_grid(n: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("spectral grid n = {n} < 4")));
    }
    if !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("spectral grid n = {n} is not a power of two")));
    }
    Ok(())
}

/// Complex scalar grid with 3-D transforms.
struct Spectrum {
    n: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    fn from_real(n: usize, values: impl Iterator<Item = f64>) -> Self {
        Self { n, data: values.map(|v| Complex64::new(v, 0.0)).collect() }
    }

    fn transform(&mut self, planner: &mut FftPlanner<f64>, inverse: bool) {
        let n = self.n;
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..3 {
            let stride = n.pow(2 - axis as u32);
            for a in 0..n {
                for b in 0..n {
                    let base = match axis {
                        0 => a * n + b,
                        1 => a * n * n + b,
                        _ => (a * n + b) * n,
                    };
                    for (m, slot) in line.iter_mut().enumerate() {
                        *slot = self.data[base + m * stride];
                    }
                    fft.process(&mut line);
                    for (m, v) in line.iter().enumerate() {
                        self.data[base + m * stride] = *v;
                    }
                }
            }
        }
        if inverse {
            let scale = 1.0 / (n * n * n) as f64;
            for v in &mut self.data {
                *v *= scale;
            }
        }
    }
}

/// Angular wavenumber of FFT index `m`; the Nyquist index is reported
/// separately so odd multipliers can drop it.
fn wavenumber(m: usize, n: usize, length: f64) -> (f64, bool) {
    let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
    let nyquist = n % 2 == 0 && m == n / 2;
    (2.0 * std::f64::consts::PI * signed / length, nyquist)
}

fn for_each_mode(n: usize, length: f64, mut f: impl FnMut(usize, [f64; 3], bool)) {
    for i in 0..n {
        let (a, na) = wavenumber(i, n, length);
        for j in 0..n {
            let (b, nb) = wavenumber(j, n, length);
            for k in 0..n {
                let (c, nc) = wavenumber(k, n, length);
                f((i * n + j) * n + k, [a, b, c], na || nb || nc);
            }
        }
    }
}

fn forward_components(field: &PeriodicField, planner: &mut FftPlanner<f64>) -> [Spectrum; 3] {
    let mut out = [0, 1, 2].map(|c| Spectrum::from_real(field.n, field.data.iter().map(move |v| v[c])));
    for s in &mut out {
        s.transform(planner, false);
    }
    out
}

fn inverse_components(mut comps: [Spectrum; 3], n: usize, length: f64, planner: &mut FftPlanner<f64>) -> PeriodicField {
    for s in &mut comps {
        s.transform(planner, true);
    }
    let data = (0..n * n * n)
        .map(|idx| Vec3::new(comps[0].data[idx].re, comps[1].data[idx].re, comps[2].data[idx].re))
        .collect();
    PeriodicField { n, length, data }
}

/// Stray field of a periodic magnetization: `H^(xi) = -(m^ . xi^) xi^` for
/// `xi != 0` and `H^(0) = 0`.
pub fn stray_field_spectral(m: &PeriodicField) -> Result<PeriodicField> {
    check_grid(m.n)?;
    let (n, length) = (m.n, m.length);
    let mut planner = FftPlanner::new();
    let mut comps = forward_components(m, &mut planner);
    for_each_mode(n, length, |idx, xi, _| {
        let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        if k2 == 0.0 {
            for c in comps.iter_mut() {
                c.data[idx] = Complex64::new(0.0, 0.0);
            }
            return;
        }
        let proj = (comps[0].data[idx] * xi[0] + comps[1].data[idx] * xi[1] + comps[2].data[idx] * xi[2]) / k2;
        for (c, x) in comps.iter_mut().zip(xi) {
            c.data[idx] = -proj * x;
        }
    });
    Ok(inverse_components(comps, n, length, &mut planner))
}

/// Spectral `(div f, curl f)`. Nyquist modes are dropped since the odd
/// symbol has no real counterpart there.
pub fn div_curl(f: &PeriodicField) -> Result<(Vec<f64>, PeriodicField)> {
    check_grid(f.n)?;
    let (n, length) = (f.n, f.length);
    let mut planner = FftPlanner::new();
    let comps = forward_components(f, &mut planner);
    let mut div = Spectrum { n, data: vec![Complex64::new(0.0, 0.0); n * n * n] };
    let mut curl = [0, 1, 2].map(|_| Spectrum { n, data: vec![Complex64::new(0.0, 0.0); n * n * n] });
    let i = Complex64::new(0.0, 1.0);
    for_each_mode(n, length, |idx, xi, nyq| {
        if nyq {
            return;
        }
        let v = [comps[0].data[idx], comps[1].data[idx], comps[2].data[idx]];
        div.data[idx] = i * (v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2]);
        curl[0].data[idx] = i * (v[2] * xi[1] - v[1] * xi[2]);
        curl[1].data[idx] = i * (v[0] * xi[2] - v[2] * xi[0]);
        curl[2].data[idx] = i * (v[1] * xi[0] - v[0] * xi[1]);
    });
    div.transform(&mut planner, true);
    let div = div.data.iter().map(|c| c.re).collect();
    Ok((div, inverse_components(curl, n, length, &mut planner)))
}

/// Inverse of `(div, curl)` on mean-zero fields:
/// `u^(xi) = -i |xi|^-2 (a^(xi) xi - xi x b^(xi))`.
pub fn inverse_div_curl(div: &[f64], curl: &PeriodicField) -> Result<PeriodicField> {
    check_grid(curl.n)?;
    let (n, length) = (curl.n, curl.length);
    if div.len() != n * n * n {
        return Err(Error::GridMismatch("divergence and curl grids differ".into()));
    }
    let mut planner = FftPlanner::new();
    let mut a = Spectrum::from_real(n, div.iter().copied());
    a.transform(&mut planner, false);
    let b = forward_components(curl, &mut planner);
    let mut out = [0, 1, 2].map(|_| Spectrum { n, data: vec![Complex64::new(0.0, 0.0); n * n * n] });
    let mi = Complex64::new(0.0, -1.0);
    for_each_mode(n, length, |idx, xi, nyq| {
        let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        if k2 == 0.0 || nyq {
            return;
        }
        let bv = [b[0].data[idx], b[1].data[idx], b[2].data[idx]];
        let xb = [
            bv[2] * xi[1] - bv[1] * xi[2],
            bv[0] * xi[2] - bv[2] * xi[0],
            bv[1] * xi[0] - bv[0] * xi[1],
        ];
        for c in 0..3 {
            out[c].data[idx] = mi * (a.data[idx] * xi[c] - xb[c]) / k2;
        }
    });
    Ok(inverse_components(out, n, length, &mut planner))
}

/// Outcome of the spectral identity checks.
#[derive(Debug, Clone, Copy)]
pub struct SpectralCheck {
    pub round_trip_error: f64,
    pub curl_max: f64,
    pub linearity_error: f64,
}

/// Band-limited trigonometric test field with a few deterministic modes.
pub fn sample_field(n: usize, length: f64, seed: u64) -> PeriodicField {
    let two_pi = 2.0 * std::f64::consts::PI / length;
    let s = seed as f64;
    let modes: Vec<([f64; 3], Vec3, f64)> = (0..6)
        .map(|q| {
            let q = q as f64;
            let k = [
                ((q + s) % 3.0).floor() + 1.0,
                ((2.0 * q + s) % 4.0).floor() - 1.0,
                ((q * s + 1.0) % 3.0).floor(),
            ];
            let a = Vec3::new((q + 1.0 + s).sin(), (2.0 * q + s).cos(), (0.5 * q - s).sin());
            (k, a, 0.3 * q + s)
        })
        .collect();
    PeriodicField::from_fn(n, length, |x| {
        modes.iter().fold(Vec3::zeros(), |acc, (k, a, phase)| {
            let arg = two_pi * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]) + phase;
            acc + a * arg.sin()
        })
    })
}

/// Round-trip, curl-freeness and linearity on band-limited samples.
pub fn check_spectral(n: usize, length: f64) -> Result<SpectralCheck> {
    let m = sample_field(n, length, 1);
    let v = sample_field(n, length, 2);
    let h = stray_field_spectral(&m)?;

    // H is a mean-zero gradient; (div, curl) followed by the inverse
    // multiplier must reproduce it.
    let (div, curl) = div_curl(&h)?;
    let back = inverse_div_curl(&div, &curl)?;
    let round_trip_error = back.max_abs_diff(&h);
    let curl_max = curl.max_abs();

    let (alpha, beta) = (0.7, -1.3);
    let combo = PeriodicField {
        n,
        length,
        data: m.data.iter().zip(&v.data).map(|(a, b)| a * alpha + b * beta).collect(),
    };
    let hv = stray_field_spectral(&v)?;
    let hc = stray_field_spectral(&combo)?;
    let linearity_error = hc
        .data
        .iter()
        .zip(h.data.iter().zip(&hv.data))
        .map(|(c, (a, b))| (c - (a * alpha + b * beta)).amax())
        .fold(0.0, f64::max);
    Ok(SpectralCheck { round_trip_error, curl_max, linearity_error })
}
