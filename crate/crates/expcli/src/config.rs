//! Experiment configuration: a `key = value` file merged with flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::ExpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = ExpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(ExpError::Config(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub map: String,
    /// Observable sources; several are separated by `;` in files and flags.
    pub phi: Vec<String>,
    pub max_period: usize,
    pub cells: usize,
    pub depth: usize,
    pub grid: usize,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub points: Vec<String>,
    pub z: Vec<String>,
    pub m: usize,
    pub a_values: Vec<String>,
    pub t_values: Vec<f64>,
    pub tol: Option<f64>,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            map: "doubling".into(),
            phi: vec!["-cos(2*pi*x)".into()],
            max_period: 12,
            cells: 4096,
            depth: 14,
            grid: 4096,
            eps: 0.1,
            delta: 0.0,
            trials: 200,
            seed: 0,
            out: None,
            format: Format::Json,
            points: Vec::new(),
            z: Vec::new(),
            m: 4,
            a_values: Vec::new(),
            t_values: vec![0.5, 1.0, 2.0, 4.0],
            tol: None,
            threads: None,
        }
    }
}

fn list(v: &str, sep: char) -> Vec<String> {
    v.split(sep).map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ExpError> {
    v.trim().parse().map_err(|_| ExpError::Config(format!("bad value `{v}` for `{key}`")))
}

impl ExperimentConfig {
    /// Applies one `key = value` setting. Keys accept `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExpError> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "map" => self.map = v.to_string(),
            "phi" => self.phi = list(v, ';'),
            "max_period" => self.max_period = num(&key, v)?,
            "cells" => self.cells = num(&key, v)?,
            "depth" => self.depth = num(&key, v)?,
            "grid" => self.grid = num(&key, v)?,
            "eps" => self.eps = num(&key, v)?,
            "delta" => self.delta = num(&key, v)?,
            "trials" => self.trials = num(&key, v)?,
            "seed" => self.seed = num(&key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "format" => self.format = v.parse()?,
            "points" => self.points = list(v, ','),
            "z" => self.z = list(v, ','),
            "m" => self.m = num(&key, v)?,
            "a_values" => self.a_values = list(v, ','),
            "t_values" => {
                self.t_values = list(v, ',').iter().map(|t| num(&key, t)).collect::<Result<_, _>>()?;
            }
            "tol" => self.tol = Some(num(&key, v)?),
            "threads" => self.threads = Some(num(&key, v)?),
            _ => return Err(ExpError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse_str(text: &str) -> Result<BTreeMap<String, String>, ExpError> {
        let mut out = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ExpError::Config(format!("line {}: expected key = value", no + 1)))?;
            out.insert(k.trim().replace('-', "_"), v.trim().to_string());
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self, ExpError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = ExperimentConfig::default();
        for (k, v) in Self::parse_str(&text)? {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExpError> {
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(ExpError::Config(format!("eps must be > 0, got {}", self.eps)));
        }
        if self.delta.is_nan() || self.delta < 0.0 {
            return Err(ExpError::Config(format!("delta must be >= 0, got {}", self.delta)));
        }
        if self.max_period == 0 || self.depth == 0 {
            return Err(ExpError::Config("max_period and depth must be positive".into()));
        }
        if self.phi.is_empty() {
            return Err(ExpError::Config("no observable given".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_text() {
        let text = "# comment\nmap = tent:a=2\nphi = cos(pi*x); -dist(x,[0.8, 1.6])\nmax-period=10\nformat = csv\n";
        let mut cfg = ExperimentConfig::default();
        for (k, v) in ExperimentConfig::parse_str(text).unwrap() {
            cfg.set(&k, &v).unwrap();
        }
        assert_eq!(cfg.map, "tent:a=2");
        assert_eq!(cfg.phi, vec!["cos(pi*x)", "-dist(x,[0.8, 1.6])"]);
        assert_eq!(cfg.max_period, 10);
        assert_eq!(cfg.format, Format::Csv);
    }

    #[test]
    fn rejects_bad_input() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.set("nope", "1").is_err());
        assert!(cfg.set("cells", "many").is_err());
        assert!(ExperimentConfig::parse_str("no equals sign").is_err());
        cfg.eps = 0.0;
        assert!(cfg.validate().is_err());
    }
}
