//! Run configuration: a sectioned `key = value` text file.
//!
//! ```text
//! scenario = "jump"
//!
//! [initial]
//! kind = "constant"
//! minus = [0.6, 0.8, 0.0]
//! plus = [-0.6, 0.8, 0.0]
//!
//! [study]
//! epsilons = [0.1, 0.05, 0.025, 0.0125]
//! t_end = 0.5
//! ```
//!
//! Every key is optional; missing keys take the defaults below. Unknown
//! keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expansion::{InitialData, StudyConfig};
use crate::full_model::CrossTerm;
use crate::geometry::{DomainConfig, Grading};
use crate::layer_internal::{InitialProfile, PicardConfig, ProfileGridConfig};
use crate::vec3::Vec3;

/// Renormalization larger than this is reported.
pub const RENORMALIZE_WARN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSection {
    pub cells_per_side: usize,
    pub v_sigma_halfwidth: f64,
    pub v_gamma_width: f64,
    pub w_gamma_width: f64,
}

impl Default for DomainSection {
    fn default() -> Self {
        let d = DomainConfig::uniform(64);
        Self {
            cells_per_side: d.cells_per_side,
            v_sigma_halfwidth: d.v_sigma_halfwidth,
            v_gamma_width: d.v_gamma_width,
            w_gamma_width: d.w_gamma_width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    Constant,
    Tilted,
    TiltedJump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub kind: InitialKind,
    pub minus: [f64; 3],
    pub plus: [f64; 3],
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { kind: InitialKind::Constant, minus: [0.6, 0.8, 0.0], plus: [-0.6, 0.8, 0.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossTermKind {
    Lagged,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    pub epsilons: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
    pub limit_dt: f64,
    pub theta: f64,
    pub cross_term: CrossTermKind,
    pub cells_per_epsilon: f64,
    pub profile_cells: usize,
    pub eclass_order: usize,
}

impl Default for StudySection {
    fn default() -> Self {
        let s = StudyConfig::default();
        Self {
            epsilons: s.epsilons,
            t_end: s.t_end,
            dt: s.dt,
            limit_dt: s.limit_dt,
            theta: 0.5,
            cross_term: CrossTermKind::Lagged,
            cells_per_epsilon: s.cells_per_epsilon,
            profile_cells: s.profile_cells,
            eclass_order: s.eclass_order,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialProfileKind {
    Slerp,
    Lift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSection {
    pub y_max: f64,
    pub h0: f64,
    pub ratio: f64,
    pub dt: f64,
    pub max_iter: usize,
    pub initial: InitialProfileKind,
}

impl Default for ProfileSection {
    fn default() -> Self {
        let g = ProfileGridConfig::default();
        Self { y_max: g.y_max, h0: g.h0, ratio: g.ratio, dt: g.dt, max_iter: 30, initial: InitialProfileKind::Slerp }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub picard: f64,
    pub tail: f64,
    pub unit_norm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { picard: 1e-8, tail: 1e-6, unit_norm: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StraySection {
    pub n: usize,
    pub length: f64,
}

impl Default for StraySection {
    fn default() -> Self {
        Self { n: 16, length: std::f64::consts::TAU }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: String,
    /// Seed for sampled checks.
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub domain: DomainSection,
    pub initial: InitialSection,
    pub study: StudySection,
    pub profiles: ProfileSection,
    pub tolerances: Tolerances,
    pub stray: StraySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: "jump".into(),
            seed: 7,
            output_dir: None,
            domain: DomainSection::default(),
            initial: InitialSection::default(),
            study: StudySection::default(),
            profiles: ProfileSection::default(),
            tolerances: Tolerances::default(),
            stray: StraySection::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn unit(name: &str, v: &mut [f64; 3], warnings: &mut Vec<String>) -> Result<()> {
    let n = Vec3::from(*v).norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Config(format!("{name} must be a nonzero finite vector")));
    }
    if (n - 1.0).abs() > RENORMALIZE_WARN {
        warnings.push(format!("{name} renormalized from length {n}"));
    }
    v.iter_mut().for_each(|c| *c /= n);
    Ok(())
}

impl RunConfig {
    /// Checks ranges and normalizes the initial vectors; returns warnings.
    pub fn validate(&mut self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        unit("initial.minus", &mut self.initial.minus, &mut warnings)?;
        unit("initial.plus", &mut self.initial.plus, &mut warnings)?;
        let s = &self.study;
        if s.epsilons.is_empty() {
            return Err(Error::Config("study.epsilons is empty".into()));
        }
        for &e in &s.epsilons {
            positive("study.epsilons entry", e)?;
        }
        positive("study.t_end", s.t_end)?;
        positive("study.dt", s.dt)?;
        positive("study.limit_dt", s.limit_dt)?;
        positive("study.cells_per_epsilon", s.cells_per_epsilon)?;
        if !(0.0..=1.0).contains(&s.theta) {
            return Err(Error::Config(format!("study.theta must lie in [0, 1], got {}", s.theta)));
        }
        let p = &self.profiles;
        positive("profiles.y_max", p.y_max)?;
        positive("profiles.h0", p.h0)?;
        positive("profiles.ratio", p.ratio)?;
        positive("profiles.dt", p.dt)?;
        let t = &self.tolerances;
        positive("tolerances.picard", t.picard)?;
        positive("tolerances.tail", t.tail)?;
        positive("tolerances.unit_norm", t.unit_norm)?;
        positive("stray.length", self.stray.length)?;
        // geometry checks (overlap, cell counts) happen in build_domain
        Ok(warnings)
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).unwrap_or_default();
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn domain_config(&self, cells_per_side: usize) -> DomainConfig {
        DomainConfig {
            cells_per_side,
            grading: Grading::Uniform,
            v_sigma_halfwidth: self.domain.v_sigma_halfwidth,
            v_gamma_width: self.domain.v_gamma_width,
            w_gamma_width: self.domain.w_gamma_width,
        }
    }

    pub fn initial_data(&self) -> InitialData {
        match self.initial.kind {
            InitialKind::Constant => InitialData::PiecewiseConstant {
                minus: Vec3::from(self.initial.minus),
                plus: Vec3::from(self.initial.plus),
            },
            InitialKind::Tilted => InitialData::Tilted,
            InitialKind::TiltedJump => InitialData::TiltedJump,
        }
    }

    pub fn cross_term(&self) -> CrossTerm {
        match self.study.cross_term {
            CrossTermKind::Lagged => CrossTerm::LaggedImplicit,
            CrossTermKind::Explicit => CrossTerm::Explicit,
        }
    }

    pub fn profile_grid(&self) -> ProfileGridConfig {
        ProfileGridConfig {
            y_max: self.profiles.y_max,
            h0: self.profiles.h0,
            ratio: self.profiles.ratio,
            dt: self.profiles.dt,
            t_end: self.study.t_end,
        }
    }

    pub fn picard(&self) -> PicardConfig {
        PicardConfig {
            tol: self.tolerances.picard,
            max_iter: self.profiles.max_iter,
            initial: match self.profiles.initial {
                InitialProfileKind::Slerp => InitialProfile::Slerp,
                InitialProfileKind::Lift => InitialProfile::Lift,
            },
        }
    }

    pub fn study_config(&self) -> StudyConfig {
        StudyConfig {
            initial: self.initial_data(),
            epsilons: self.study.epsilons.clone(),
            t_end: self.study.t_end,
            dt: self.study.dt,
            limit_dt: self.study.limit_dt,
            cells_per_epsilon: self.study.cells_per_epsilon,
            profile_cells: self.study.profile_cells,
            profile_grid: self.profile_grid(),
            picard: self.picard(),
            domain: self.domain_config(self.domain.cells_per_side),
            eclass_order: self.study.eclass_order,
            theta: self.study.theta,
            cross_term: self.cross_term(),
        }
    }

    /// Applies one override produced by [`parse_tol_override`].
    pub fn apply_override(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "picard" => self.tolerances.picard = value,
            "tail" => self.tolerances.tail = value,
            "unit_norm" => self.tolerances.unit_norm = value,
            _ => return Err(Error::Config(format!("unknown tolerance {key:?}"))),
        }
        Ok(())
    }
}

/// Parses config text; returns the validated config and any warnings.
pub fn parse_config(text: &str) -> Result<(RunConfig, Vec<String>)> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(one_line(&e.to_string())))?;
    let warnings = cfg.validate()?;
    Ok((cfg, warnings))
}

pub fn load_config(path: &Path) -> Result<(RunConfig, Vec<String>)> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::Config(format!("config not found: {}", path.display())))
        }
        Err(e) => return Err(Error::Config(format!("config unreadable: {}: {e}", path.display()))),
    };
    parse_config(&text)
}

/// Parses a `--tol-override` argument `K=V`. Keys: `picard`, `tail`,
/// `unit_norm`, optionally prefixed by `tolerances.`.
pub fn parse_tol_override(arg: &str) -> Result<(String, f64)> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("tolerance override {arg:?} is not KEY=VALUE")))?;
    let k = k.trim();
    let key = k.strip_prefix("tolerances.").unwrap_or(k);
    if !matches!(key, "picard" | "tail" | "unit_norm") {
        return Err(Error::Config(format!("unknown tolerance {k:?} (expected picard, tail or unit_norm)")));
    }
    let value: f64 = v.trim().parse().map_err(|_| Error::Config(format!("tolerance {key} has non-numeric value {v:?}")))?;
    positive(&format!("tolerance {key}"), value)?;
    Ok((key.to_string(), value))
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let (cfg, w) = parse_config("").unwrap();
        assert!(w.is_empty());
        assert_eq!(cfg.study.epsilons, vec![0.1, 0.05, 0.025, 0.0125]);
        assert_eq!(cfg.initial.plus, [-0.6, 0.8, 0.0]);
    }

    #[test]
    fn sections_and_renormalization() {
        let text = "scenario = \"x\"\n[initial]\nminus = [0.0, 2.0, 0.0]\n[study]\nepsilons = [0.2, 0.1, 0.05]\n";
        let (cfg, w) = parse_config(text).unwrap();
        assert_eq!(cfg.initial.minus, [0.0, 1.0, 0.0]);
        assert_eq!(w.len(), 1);
        assert_eq!(cfg.study.epsilons.len(), 3);
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        assert!(parse_config("bogus = 1").is_err());
        assert!(parse_config("[study]\nepsilons = [-0.1]").is_err());
        assert!(parse_config("[initial]\nplus = [0, 0, 0]").is_err());
        assert!(parse_config("[study\n").is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let (a, _) = parse_config("").unwrap();
        let (b, _) = parse_config("[study]\nt_end = 0.25").unwrap();
        assert_eq!(a.hash(), RunConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn tolerance_overrides() {
        assert_eq!(parse_tol_override("picard=1e-6").unwrap(), ("picard".into(), 1e-6));
        assert_eq!(parse_tol_override("tolerances.tail = 2e-7").unwrap(), ("tail".into(), 2e-7));
        assert!(parse_tol_override("picard").is_err());
        assert!(parse_tol_override("speed=1").is_err());
        assert!(parse_tol_override("tail=-1").is_err());
        assert!(parse_tol_override("tail=abc").is_err());
    }
}
