//! Slab domain, level sets, cutoffs and the conormal weight.
//!
//! The slab is `(-1, 1)` with the interface at `x = 0` and the boundary at
//! `x = ±1`. Each half carries its own node array; the interface node is
//! stored once per side so that fields may jump across it.

use crate::error::{Error, Result};

/// Side of the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Minus => -1.0,
            Side::Plus => 1.0,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Minus => Side::Plus,
            Side::Plus => Side::Minus,
        }
    }
}

/// Where geometric refinement concentrates cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Refine {
    Sigma,
    Gamma,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    Uniform,
    Geometric { ratio: f64, toward: Refine },
}

/// Construction parameters for [`SlabDomain`].
#[derive(Debug, Clone, PartialEq)]
pub struct DomainConfig {
    pub cells_per_side: usize,
    pub grading: Grading,
    pub v_sigma_halfwidth: f64,
    pub v_gamma_width: f64,
    /// Width of the band next to the boundary on which the cutoff equals one.
    pub w_gamma_width: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            cells_per_side: 64,
            grading: Grading::Uniform,
            v_sigma_halfwidth: 0.35,
            v_gamma_width: 0.25,
            w_gamma_width: 0.1,
        }
    }
}

impl DomainConfig {
    pub fn uniform(cells_per_side: usize) -> Self {
        Self { cells_per_side, ..Self::default() }
    }
}

pub const MIN_CELLS_PER_SIDE: usize = 8;
const MIN_CELL_WIDTH: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SlabDomain {
    pub x_min: f64,
    pub x_max: f64,
    pub interface: f64,
    pub config: DomainConfig,
    /// Nodes of `[-1, 0]`, increasing, last entry is the interface.
    pub nodes_minus: Vec<f64>,
    /// Nodes of `[0, 1]`, increasing, first entry is the interface.
    pub nodes_plus: Vec<f64>,
    pub level_sets: LevelSets,
}

/// Cell widths of `[0, 1]` split into `n` cells, listed from the interface
/// outward.
fn half_widths(n: usize, grading: Grading) -> Result<Vec<f64>> {
    let geometric = |n: usize, r: f64, length: f64| -> Vec<f64> {
        // widths listed from the refined end: w r^{n-1}, ..., w r, w
        if r == 1.0 {
            return vec![length / n as f64; n];
        }
        let w_max = length * (1.0 - r) / (1.0 - r.powi(n as i32));
        (0..n).map(|k| w_max * r.powi((n - 1 - k) as i32)).collect()
    };
    let widths = match grading {
        Grading::Uniform => vec![1.0 / n as f64; n],
        Grading::Geometric { ratio, toward } => {
            if !(ratio > 0.0 && ratio <= 1.0) {
                return Err(Error::Domain(format!("grading ratio {ratio} outside (0, 1]")));
            }
            match toward {
                Refine::Sigma => geometric(n, ratio, 1.0),
                Refine::Gamma => {
                    let mut w = geometric(n, ratio, 1.0);
                    w.reverse();
                    w
                }
                Refine::Both => {
                    let n1 = n / 2;
                    let n2 = n - n1;
                    let mut w = geometric(n1, ratio, 0.5);
                    let mut outer = geometric(n2, ratio, 0.5);
                    outer.reverse();
                    w.extend(outer);
                    w
                }
            }
        }
    };
    if let Some(w) = widths.iter().find(|&&w| !(w >= MIN_CELL_WIDTH)) {
        return Err(Error::Domain(format!("grading produces cell width {w:e} below {MIN_CELL_WIDTH:e}")));
    }
    Ok(widths)
}

/// Builds the two half grids of the slab.
pub fn build_domain(config: DomainConfig) -> Result<SlabDomain> {
    if config.cells_per_side < MIN_CELLS_PER_SIDE {
        return Err(Error::Domain(format!(
            "cells_per_side = {} (need at least {MIN_CELLS_PER_SIDE})",
            config.cells_per_side
        )));
    }
    let level_sets = LevelSets::new(config.v_sigma_halfwidth, config.v_gamma_width, config.w_gamma_width)?;
    let widths = half_widths(config.cells_per_side, config.grading)?;
    let mut plus = Vec::with_capacity(widths.len() + 1);
    let mut x = 0.0;
    plus.push(0.0);
    for w in &widths {
        x += w;
        plus.push(x);
    }
    *plus.last_mut().unwrap() = 1.0;
    let mut minus: Vec<f64> = plus.iter().rev().map(|x| -x).collect();
    *minus.last_mut().unwrap() = 0.0;
    Ok(SlabDomain {
        x_min: -1.0,
        x_max: 1.0,
        interface: 0.0,
        config,
        nodes_minus: minus,
        nodes_plus: plus,
        level_sets,
    })
}

impl SlabDomain {
    pub fn nodes(&self, side: Side) -> &[f64] {
        match side {
            Side::Minus => &self.nodes_minus,
            Side::Plus => &self.nodes_plus,
        }
    }

    /// Nodes of the whole slab with the interface listed once.
    pub fn merged_nodes(&self) -> Vec<f64> {
        let mut v = self.nodes_minus.clone();
        v.extend_from_slice(&self.nodes_plus[1..]);
        v
    }

    pub fn nodes_per_side(&self) -> usize {
        self.nodes_plus.len()
    }

    pub fn min_cell_width(&self) -> f64 {
        self.nodes_plus.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Conormal weights `w(x) = x(1 - x^2)` of the field `Z = w(x) d/dx`
    /// at the nodes of each side. The time field `d/dt` needs no weight.
    pub fn conormal_weights(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.nodes_minus.iter().map(|&x| conormal_weight(x)).collect(),
            self.nodes_plus.iter().map(|&x| conormal_weight(x)).collect(),
        )
    }
}

/// Generating conormal field `Z = w(x) d/dx` together with `Z0 = d/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConormalField {
    Time,
    Space,
}

/// Weight of the spatial conormal field; vanishes at the interface and
/// at the boundary.
pub fn conormal_weight(x: f64) -> f64 {
    x * (1.0 - x * x)
}

/// Quintic smoothstep on `[0, 1]`, C2 at both ends.
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSets {
    pub v_sigma_halfwidth: f64,
    pub v_gamma_width: f64,
    pub w_gamma_width: f64,
}

impl LevelSets {
    pub fn new(v_sigma_halfwidth: f64, v_gamma_width: f64, w_gamma_width: f64) -> Result<Self> {
        if !(v_sigma_halfwidth > 0.0 && v_gamma_width > 0.0) {
            return Err(Error::Domain("neighbourhood widths must be positive".into()));
        }
        if v_sigma_halfwidth + v_gamma_width >= 1.0 {
            return Err(Error::Domain(format!(
                "interface and boundary neighbourhoods overlap: {v_sigma_halfwidth} + {v_gamma_width} >= 1"
            )));
        }
        if !(w_gamma_width > 0.0 && w_gamma_width < v_gamma_width) {
            return Err(Error::Domain(format!(
                "cutoff band {w_gamma_width} must lie strictly inside the boundary neighbourhood {v_gamma_width}"
            )));
        }
        Ok(Self { v_sigma_halfwidth, v_gamma_width, w_gamma_width })
    }

    /// Signed distance to the interface.
    pub fn psi(&self, x: f64) -> f64 {
        x
    }

    /// Distance to the boundary.
    pub fn phi(&self, x: f64) -> f64 {
        1.0 - x.abs()
    }

    pub fn in_v_sigma(&self, x: f64) -> bool {
        x.abs() < self.v_sigma_halfwidth
    }

    pub fn in_v_gamma(&self, x: f64) -> bool {
        self.phi(x) < self.v_gamma_width
    }

    /// Boundary cutoff: one within `w_gamma_width` of the boundary, zero
    /// outside the boundary neighbourhood.
    pub fn theta(&self, x: f64) -> f64 {
        let d = self.phi(x);
        let s = (self.v_gamma_width - d) / (self.v_gamma_width - self.w_gamma_width);
        smoothstep(s)
    }

    /// Interface blend: one on the inner half of `V_Sigma`, zero outside
    /// it, C2 smoothstep in between.
    pub fn sigma_blend(&self, x: f64) -> f64 {
        smoothstep(2.0 * (1.0 - x.abs() / self.v_sigma_halfwidth))
    }

    /// Outward normal of the boundary point nearest to `x`.
    pub fn boundary_normal(&self, x: f64) -> f64 {
        if x >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_eight_cells() {
        let d = build_domain(DomainConfig::uniform(8)).unwrap();
        assert_eq!(d.nodes_plus.len(), 9);
        assert_eq!(d.nodes_minus.len(), 9);
        for w in d.nodes_plus.windows(2) {
            assert!((w[1] - w[0] - 0.125).abs() < 1e-15);
        }
        assert_eq!(d.nodes_minus[0], -1.0);
        assert_eq!(*d.nodes_minus.last().unwrap(), 0.0);
        assert_eq!(d.nodes_plus[0], 0.0);
        assert_eq!(*d.nodes_plus.last().unwrap(), 1.0);
    }

    #[test]
    fn geometric_toward_sigma() {
        let r: f64 = 0.5;
        let cfg = DomainConfig {
            grading: Grading::Geometric { ratio: r, toward: Refine::Sigma },
            ..DomainConfig::uniform(8)
        };
        let d = build_domain(cfg).unwrap();
        let widths: Vec<f64> = d.nodes_plus.windows(2).map(|w| w[1] - w[0]).collect();
        let expected = (1.0 - r) / (1.0 - r.powi(8)) * r.powi(7);
        // summation oracle: the geometric widths add up to the half length
        let total: f64 = (0..8).map(|k| expected / r.powi(k)).sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!((widths[0] - expected).abs() < 1e-15);
        for w in widths.windows(2) {
            assert!((w[0] / w[1] - r).abs() < 1e-12);
        }
        // the minus side mirrors the plus side
        let wm: Vec<f64> = d.nodes_minus.windows(2).map(|w| w[1] - w[0]).collect();
        assert!((wm[7] - expected).abs() < 1e-15);
    }

    #[test]
    fn graded_bands_are_monotone() {
        let cfg = DomainConfig {
            grading: Grading::Geometric { ratio: 0.8, toward: Refine::Both },
            ..DomainConfig::uniform(16)
        };
        let d = build_domain(cfg).unwrap();
        let widths: Vec<f64> = d.nodes_plus.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(widths.iter().all(|&w| w > 0.0));
        assert!(widths[..8].windows(2).all(|w| w[1] > w[0]));
        assert!(widths[8..].windows(2).all(|w| w[1] < w[0]));
        assert!((d.nodes_plus[8] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(build_domain(DomainConfig::uniform(0)).is_err());
        assert!(build_domain(DomainConfig::uniform(7)).is_err());
        let tiny = DomainConfig {
            grading: Grading::Geometric { ratio: 0.01, toward: Refine::Sigma },
            ..DomainConfig::uniform(16)
        };
        assert!(matches!(build_domain(tiny), Err(Error::Domain(_))));
        let overlap = DomainConfig { v_sigma_halfwidth: 0.8, ..DomainConfig::uniform(8) };
        assert!(build_domain(overlap).is_err());
        let bad_ratio = DomainConfig {
            grading: Grading::Geometric { ratio: 1.5, toward: Refine::Gamma },
            ..DomainConfig::uniform(8)
        };
        assert!(build_domain(bad_ratio).is_err());
    }

    #[test]
    fn conormal_weight_values() {
        assert_eq!(conormal_weight(0.0), 0.0);
        assert_eq!(conormal_weight(1.0), 0.0);
        assert_eq!(conormal_weight(-1.0), 0.0);
        assert!((conormal_weight(0.5) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn conormal_weight_vanishes_to_first_order() {
        let d = build_domain(DomainConfig::uniform(200)).unwrap();
        for x in d.merged_nodes() {
            let bound = 2.0 * x.abs().min(1.0 - x.abs());
            assert!(conormal_weight(x).abs() <= bound + 1e-15, "x = {x}");
        }
    }

    #[test]
    fn level_set_signs() {
        let d = build_domain(DomainConfig::uniform(32)).unwrap();
        let ls = &d.level_sets;
        assert_eq!(ls.psi(0.0), 0.0);
        assert_eq!(ls.phi(1.0), 0.0);
        assert_eq!(ls.phi(-1.0), 0.0);
        for x in d.merged_nodes() {
            if x != 0.0 {
                assert!(ls.psi(x) * x > 0.0);
            }
            if x.abs() < 1.0 {
                assert!(ls.phi(x) > 0.0);
            }
        }
    }

    #[test]
    fn cutoffs_are_disjoint_and_smooth() {
        let d = build_domain(DomainConfig::uniform(400)).unwrap();
        let ls = &d.level_sets;
        let xs = d.merged_nodes();
        for &x in &xs {
            if ls.in_v_sigma(x) {
                assert_eq!(ls.theta(x), 0.0);
            }
            if ls.phi(x) <= ls.w_gamma_width {
                assert_eq!(ls.theta(x), 1.0);
            }
            if !ls.in_v_gamma(x) {
                assert_eq!(ls.theta(x), 0.0);
            }
        }
        // bounded second differences: C2 cutoff
        let h = xs[1] - xs[0];
        let max_d2 = xs
            .windows(3)
            .map(|w| ((ls.theta(w[0]) - 2.0 * ls.theta(w[1]) + ls.theta(w[2])) / (h * h)).abs())
            .fold(0.0, f64::max);
        // quintic smoothstep: |S''| <= 10/sqrt(3) on [0,1], scaled by the band width
        let band = ls.v_gamma_width - ls.w_gamma_width;
        assert!(max_d2 <= 10.0 / 3f64.sqrt() / (band * band) * 1.01);
    }
}
