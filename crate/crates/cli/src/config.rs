//! Flat `key = value` run configuration.

use std::fmt;
use std::path::Path;

use robicp::{ConvergenceSpec, FilterSpec, IcpConfig, PerturbationSpec};

pub const KEYS: [&str; 13] = [
    "knn",
    "normals_k",
    "max_density",
    "keep_ratio",
    "filter",
    "trans_eps",
    "rot_eps",
    "max_iter",
    "seed",
    "max_translation",
    "max_angle_deg",
    "perturbations",
    "jobs",
];

/// Every setting a command may need. Omitted keys keep the library
/// defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub icp: IcpConfig,
    pub perturbation: PerturbationSpec,
    pub jobs: usize,
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{key}`: `{value}` is not a valid value"))
}

impl RunConfig {
    /// Apply one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "knn" => self.icp.knn = num(key, value)?,
            "normals_k" => self.icp.normals_k = num(key, value)?,
            "max_density" => self.icp.max_density = num(key, value)?,
            "keep_ratio" => self.icp.keep_ratio = num(key, value)?,
            "filter" => {
                self.icp.filter = value.parse::<FilterSpec>().map_err(|e| e.to_string())?
            }
            "trans_eps" => self.icp.convergence.trans_eps = num(key, value)?,
            "rot_eps" => self.icp.convergence.rot_eps = num(key, value)?,
            "max_iter" => self.icp.convergence.max_iter = num(key, value)?,
            "seed" => {
                let seed = num(key, value)?;
                self.icp.seed = seed;
                self.perturbation.seed = seed;
            }
            "max_translation" => self.perturbation.max_translation = num(key, value)?,
            "max_angle_deg" => {
                self.perturbation.max_angle = num::<f64>(key, value)?.to_radians()
            }
            "perturbations" => self.perturbation.count = num(key, value)?,
            "jobs" => self.jobs = num(key, value)?,
            other => {
                return Err(format!(
                    "unknown config key `{other}` (known keys: {})",
                    KEYS.join(", ")
                ))
            }
        }
        Ok(())
    }

    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| format!("line {}: {e}", n + 1))?;
        }
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| format!("{}: {e}", p.display()))?;
                Self::parse(&text).map_err(|e| format!("{}: {e}", p.display()))
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.icp.validate().map_err(|e| e.to_string())?;
        let p = &self.perturbation;
        if !(p.max_translation >= 0.0 && p.max_angle >= 0.0) || p.count == 0 {
            return Err("perturbation bounds must be non-negative and count at least 1".into());
        }
        Ok(())
    }
}

/// The resolved configuration in the same `key = value` format.
impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ConvergenceSpec {
            trans_eps,
            rot_eps,
            max_iter,
        } = self.icp.convergence;
        writeln!(f, "knn = {}", self.icp.knn)?;
        writeln!(f, "normals_k = {}", self.icp.normals_k)?;
        writeln!(f, "max_density = {}", self.icp.max_density)?;
        writeln!(f, "keep_ratio = {}", self.icp.keep_ratio)?;
        writeln!(f, "filter = {}", self.icp.filter)?;
        writeln!(f, "trans_eps = {trans_eps}")?;
        writeln!(f, "rot_eps = {rot_eps}")?;
        writeln!(f, "max_iter = {max_iter}")?;
        writeln!(f, "seed = {}", self.icp.seed)?;
        writeln!(f, "max_translation = {}", self.perturbation.max_translation)?;
        writeln!(
            f,
            "max_angle_deg = {}",
            (self.perturbation.max_angle.to_degrees() * 1e9).round() / 1e9
        )?;
        writeln!(f, "perturbations = {}", self.perturbation.count)?;
        writeln!(f, "jobs = {}", self.jobs)
    }
}
