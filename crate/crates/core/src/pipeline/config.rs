use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ml_analysis::ForestParams;

/// Run parameters. Config files are flat `key = value` lines; missing keys
/// keep their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub theta: f64,
    pub n_c: usize,
    pub n_cxt: usize,
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
    pub window: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            theta: 0.9,
            n_c: 200,
            n_cxt: 1,
            trees: 100,
            max_depth: 10,
            min_leaf: 2,
            seed: 42,
            window: 10,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return bad(format!("theta must lie in (0, 1], got {}", self.theta));
        }
        for (key, v) in [
            ("n_c", self.n_c),
            ("trees", self.trees),
            ("max_depth", self.max_depth),
            ("min_leaf", self.min_leaf),
        ] {
            if v == 0 {
                return bad(format!("{key} must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn forest_params(&self) -> ForestParams {
        ForestParams {
            trees: self.trees,
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            ..ForestParams::default()
        }
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "theta={} n_c={} n_cxt={} trees={} max_depth={} min_leaf={} seed={} window={}",
            self.theta,
            self.n_c,
            self.n_cxt,
            self.trees,
            self.max_depth,
            self.min_leaf,
            self.seed,
            self.window
        )
    }
}
