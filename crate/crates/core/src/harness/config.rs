//! Experiment configuration as flat `key=value` text.

use std::fs;
use std::path::{Path, PathBuf};

use crate::env::ArmMode;
use crate::error::{Error, Result};
use crate::estimators::LambdaMode;
use crate::glm::{FamilyKind, GlmFamily};
use crate::policies::POLICY_NAMES;

/// Environment variable consulted for the seed when neither a flag nor the
/// config file sets one.
pub const SEED_ENV_VAR: &str = "GLB_OMD_SEED";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: FamilyKind,
    /// Gaussian noise variance; the other families are fixed at 1.
    pub dispersion: Option<f64>,
    pub d: usize,
    pub s: f64,
    pub horizon: usize,
    pub k: usize,
    pub delta: f64,
    pub trials: usize,
    pub policies: Vec<String>,
    pub lambda_mode: LambdaMode,
    pub radius_scale: f64,
    pub seed: u64,
    pub jobs: usize,
    pub arm_mode: ArmMode,
    pub arm_file: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: FamilyKind::Logistic,
            dispersion: None,
            d: 2,
            s: 3.0,
            horizon: 1000,
            k: 20,
            delta: 0.01,
            trials: 10,
            policies: vec!["glb-omd".to_string()],
            lambda_mode: LambdaMode::Practical,
            radius_scale: 1.0,
            seed: 0,
            jobs: 1,
            arm_mode: ArmMode::ResampledPerRound,
            arm_file: None,
            out: PathBuf::from("results"),
        }
    }
}

fn canonical_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}` expects a number, got `{value}`")))
}

/// Splits `key=value` lines, skipping blanks and `#` comments.
pub fn parse_kv_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected key=value, found `{line}`",
                i + 1
            ))
        })?;
        pairs.push((canonical_key(key), value.trim().to_string()));
    }
    Ok(pairs)
}

impl ExperimentConfig {
    /// Sets one key. Keys match the long flag names with `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = canonical_key(key);
        let value = value.trim();
        match key.as_str() {
            "family" => self.family = value.parse()?,
            "dispersion" => {
                self.dispersion = if value.is_empty() {
                    None
                } else {
                    Some(parse_num(&key, value)?)
                }
            }
            "d" => self.d = parse_num(&key, value)?,
            "S" | "s" => self.s = parse_num(&key, value)?,
            "T" | "horizon" => self.horizon = parse_num(&key, value)?,
            "K" | "k" => self.k = parse_num(&key, value)?,
            "delta" => self.delta = parse_num(&key, value)?,
            "trials" => self.trials = parse_num(&key, value)?,
            "policy" | "policies" => {
                self.policies = value
                    .split(',')
                    .map(|p| p.trim().to_string())
                    .filter(|p| !p.is_empty())
                    .collect()
            }
            "lambda_mode" => self.lambda_mode = value.parse()?,
            "radius_scale" => self.radius_scale = parse_num(&key, value)?,
            "seed" => self.seed = parse_num(&key, value)?,
            "jobs" => self.jobs = parse_num(&key, value)?,
            "arm_mode" => self.arm_mode = value.parse()?,
            "arm_file" => {
                self.arm_file = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "out" => self.out = PathBuf::from(value),
            other => {
                return Err(Error::Config(format!(
                    "unknown configuration key `{other}`"
                )))
            }
        }
        Ok(())
    }

    /// Applies every pair of `key=value` text on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_kv_text(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Defaults, then the seed from `env_seed`, then the config file, then
    /// `flags`, each layer overriding the previous one.
    pub fn resolve(
        config_file: Option<&Path>,
        flags: &[(String, String)],
        env_seed: Option<&str>,
    ) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(seed) = env_seed.filter(|s| !s.trim().is_empty()) {
            cfg.set("seed", seed).map_err(|_| {
                Error::Config(format!(
                    "{SEED_ENV_VAR} must be an unsigned integer, got `{seed}`"
                ))
            })?;
        }
        if let Some(path) = config_file {
            cfg.apply_text(&fs::read_to_string(path)?)?;
        }
        for (k, v) in flags {
            cfg.set(k, v)?;
        }
        if cfg.arm_file.is_some() {
            cfg.arm_mode = ArmMode::FromFile;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The effective configuration as ordered `key=value` pairs.
    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        vec![
            ("family", self.family.to_string()),
            (
                "dispersion",
                self.dispersion.map(|v| v.to_string()).unwrap_or_default(),
            ),
            ("d", self.d.to_string()),
            ("S", self.s.to_string()),
            ("T", self.horizon.to_string()),
            ("K", self.k.to_string()),
            ("delta", self.delta.to_string()),
            ("trials", self.trials.to_string()),
            ("policy", self.policies.join(",")),
            ("lambda_mode", self.lambda_mode.to_string()),
            ("radius_scale", self.radius_scale.to_string()),
            ("seed", self.seed.to_string()),
            ("jobs", self.jobs.to_string()),
            ("arm_mode", self.arm_mode.to_string()),
            (
                "arm_file",
                self.arm_file
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            ),
            ("out", self.out.display().to_string()),
        ]
    }

    pub fn to_kv_text(&self) -> String {
        self.to_kv()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn glm_family(&self) -> Result<GlmFamily> {
        GlmFamily::from_name(self.family.as_str(), self.dispersion)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if !(self.s.is_finite() && self.s > 0.0) {
            return bad(format!("S must be positive, got {}", self.s));
        }
        if self.horizon == 0 {
            return bad("T must be at least 1".into());
        }
        if self.k < 2 && self.arm_mode != ArmMode::FromFile {
            return bad(format!("K must be at least 2, got {}", self.k));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        if !(self.radius_scale.is_finite() && self.radius_scale > 0.0) {
            return bad(format!(
                "radius_scale must be positive, got {}",
                self.radius_scale
            ));
        }
        if self.policies.is_empty() {
            return bad("at least one policy is required".into());
        }
        for p in &self.policies {
            if !POLICY_NAMES.contains(&p.as_str()) {
                return bad(format!(
                    "unknown policy `{p}` (expected one of {})",
                    POLICY_NAMES.join(", ")
                ));
            }
        }
        if self.arm_mode == ArmMode::FromFile && self.arm_file.is_none() {
            return bad("arm_mode=file needs arm_file".into());
        }
        self.glm_family()?;
        Ok(())
    }
}
