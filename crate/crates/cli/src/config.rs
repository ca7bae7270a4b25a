//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::PathBuf;

use nhota_core::{InnerLimits, Order, RunConfig, USchedule};

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "NHOTA_SEED";

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self {
                line: Some(l),
                message,
            } => write!(f, "line {l}: {message}"),
            Self {
                line: None,
                message,
            } => f.write_str(message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    PhaseRetrieval,
    DiagQuadL1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub lambda: f64,
    pub noise_scale: f64,
    pub a_variance: f64,
    /// Explicit diagonal-quadratic data; generated from the seed when absent.
    pub d: Option<Vec<f64>>,
    pub c: Option<Vec<f64>>,
    pub x0: Option<Vec<f64>>,
    /// Phase-retrieval bundle to load instead of generating data.
    pub data_file: Option<PathBuf>,
    pub order: Order,
    pub m0: f64,
    pub m_tilde: f64,
    pub theta: f64,
    pub u: f64,
    pub u_min: f64,
    pub u_list: Vec<f64>,
    pub max_outer: usize,
    pub stop_f: f64,
    pub stop_stat: f64,
    pub max_inner: usize,
    pub step_guess: f64,
    pub max_doublings: usize,
    pub output_dir: PathBuf,
    /// Record elapsed time in the trace; off keeps traces byte-reproducible.
    pub wall_clock: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let run = RunConfig::default();
        Self {
            problem: ProblemKind::PhaseRetrieval,
            n: 20,
            m: 200,
            seed: 7,
            lambda: 1e-5,
            noise_scale: 1.0,
            a_variance: nhota_core::problems::DEFAULT_A_VARIANCE,
            d: None,
            c: None,
            x0: None,
            data_file: None,
            order: run.order,
            m0: run.m0,
            m_tilde: run.m_tilde,
            theta: run.theta,
            u: 0.5,
            u_min: run.u_min,
            u_list: vec![0.05, 0.25, 0.5, 0.75, 1.0],
            max_outer: 500,
            stop_f: run.stop_f,
            stop_stat: run.stop_stat,
            max_inner: run.inner.max_inner,
            step_guess: run.inner.step_guess,
            max_doublings: run.max_doublings,
            output_dir: PathBuf::from("nhota-out"),
            wall_clock: false,
        }
    }
}

/// Named starting points, applied before the other keys of a file.
pub const PRESETS: &[(&str, &str)] = &[
    ("small", "phase retrieval, n=20, m=200, noise 1"),
    ("desk", "phase retrieval, n=100, m=1000, noise 1"),
    ("noise5", "phase retrieval, n=100, m=5000, noise 5"),
    ("noise5-small", "phase retrieval, n=100, m=5000, noise 0.05"),
    ("noise1", "phase retrieval, n=100, m=5000, noise 1"),
    (
        "diag-quad",
        "diagonal quadratic + l1, n=50, seed 3, lambda 0.1",
    ),
];

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let base = ExperimentConfig::default();
    let pr = |n, m, noise_scale| ExperimentConfig {
        n,
        m,
        noise_scale,
        ..base.clone()
    };
    Some(match name {
        "small" => pr(20, 200, 1.0),
        "desk" => pr(100, 1000, 1.0),
        "noise5" => pr(100, 5000, 5.0),
        "noise5-small" => pr(100, 5000, 0.05),
        "noise1" => pr(100, 5000, 1.0),
        "diag-quad" => ExperimentConfig {
            problem: ProblemKind::DiagQuadL1,
            n: 50,
            seed: 3,
            lambda: 0.1,
            max_outer: 60,
            stop_f: f64::NEG_INFINITY,
            stop_stat: 1e-9,
            ..base.clone()
        },
        _ => return None,
    })
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    match v {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => v
            .parse::<f64>()
            .ok()
            .filter(|x| !x.is_nan())
            .ok_or_else(|| ConfigError::at(line, format!("invalid number for `{key}`: `{v}`"))),
    }
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse()
        .map_err(|_| ConfigError::at(line, format!("invalid count for `{key}`: `{v}`")))
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',')
        .map(|s| parse_f64(line, key, s.trim()))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|xs| {
            if xs.is_empty() {
                Err(ConfigError::at(line, format!("`{key}` must not be empty")))
            } else {
                Ok(xs)
            }
        })
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::at(
            line,
            format!("invalid boolean for `{key}`: `{v}`"),
        )),
    }
}

impl ExperimentConfig {
    /// Parse a config file body. A `preset` line, if any, is applied first
    /// regardless of its position.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        let mut base = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::at(
                    line,
                    format!("expected `key = value`, got `{content}`"),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            if key == "preset" {
                if base.is_some() {
                    return Err(ConfigError::at(line, "preset given twice"));
                }
                base =
                    Some(preset(value).ok_or_else(|| {
                        ConfigError::at(line, format!("unknown preset `{value}`"))
                    })?);
            } else {
                entries.push((line, key.to_string(), value.to_string()));
            }
        }
        let mut cfg = base.unwrap_or_default();
        let mut seen: Vec<&str> = Vec::new();
        for (line, key, value) in &entries {
            if seen.contains(&key.as_str()) {
                return Err(ConfigError::at(*line, format!("duplicate key `{key}`")));
            }
            seen.push(key);
            cfg.set(*line, key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "problem" => {
                self.problem = match v {
                    "phase_retrieval" => ProblemKind::PhaseRetrieval,
                    "diag_quad_l1" => ProblemKind::DiagQuadL1,
                    _ => return Err(ConfigError::at(line, format!("unknown problem `{v}`"))),
                }
            }
            "n" => self.n = parse_usize(line, key, v)?,
            "m" => self.m = parse_usize(line, key, v)?,
            "seed" => {
                self.seed = v
                    .parse()
                    .map_err(|_| ConfigError::at(line, format!("invalid seed `{v}`")))?
            }
            "lambda" => self.lambda = parse_f64(line, key, v)?,
            "noise_scale" => self.noise_scale = parse_f64(line, key, v)?,
            "a_variance" => self.a_variance = parse_f64(line, key, v)?,
            "d" => self.d = Some(parse_list(line, key, v)?),
            "c" => self.c = Some(parse_list(line, key, v)?),
            "x0" => self.x0 = Some(parse_list(line, key, v)?),
            "data_file" => self.data_file = Some(PathBuf::from(v)),
            "p" => {
                self.order = Order::from_usize(parse_usize(line, key, v)?)
                    .map_err(|e| ConfigError::at(line, e.to_string()))?
            }
            "M0" => self.m0 = parse_f64(line, key, v)?,
            "Mtilde" => self.m_tilde = parse_f64(line, key, v)?,
            "theta" => self.theta = parse_f64(line, key, v)?,
            "u" => self.u = parse_f64(line, key, v)?,
            "u_min" => self.u_min = parse_f64(line, key, v)?,
            "u_list" => self.u_list = parse_list(line, key, v)?,
            "max_outer" => self.max_outer = parse_usize(line, key, v)?,
            "stop_f" => self.stop_f = parse_f64(line, key, v)?,
            "stop_stat" => self.stop_stat = parse_f64(line, key, v)?,
            "max_inner" => self.max_inner = parse_usize(line, key, v)?,
            "step_guess" => self.step_guess = parse_f64(line, key, v)?,
            "max_doublings" => self.max_doublings = parse_usize(line, key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "wall_clock" => self.wall_clock = parse_bool(line, key, v)?,
            _ => return Err(ConfigError::at(line, format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Apply the seed override from `value` (the contents of [`SEED_ENV`]).
    pub fn override_seed(&mut self, value: &str) -> Result<(), ConfigError> {
        self.seed = value
            .trim()
            .parse()
            .map_err(|_| ConfigError::general(format!("{SEED_ENV}: invalid seed `{value}`")))?;
        Ok(())
    }

    pub fn run_config(&self, u: f64) -> RunConfig {
        RunConfig {
            order: self.order,
            m0: self.m0,
            m_tilde: self.m_tilde,
            theta: self.theta,
            u: USchedule::Constant(u),
            u_min: self.u_min,
            max_outer: self.max_outer,
            stop_f: self.stop_f,
            stop_stat: self.stop_stat,
            seed: self.seed,
            inner: InnerLimits {
                max_inner: self.max_inner,
                step_guess: self.step_guess,
            },
            max_doublings: self.max_doublings,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError::general(m));
        if self.n == 0 {
            return err("n must be positive".into());
        }
        if self.problem == ProblemKind::PhaseRetrieval && self.m == 0 && self.data_file.is_none() {
            return err("m must be positive".into());
        }
        if !(self.lambda >= 0.0) || !(self.noise_scale >= 0.0) || !(self.a_variance > 0.0) {
            return err("lambda and noise_scale must be nonnegative, a_variance positive".into());
        }
        if self.u_list.is_empty() {
            return err("u_list must not be empty".into());
        }
        for &u in std::iter::once(&self.u).chain(&self.u_list) {
            if !(u > self.u_min && u <= 1.0) {
                return err(format!("u = {u} outside ({}, 1]", self.u_min));
            }
        }
        if self.problem == ProblemKind::DiagQuadL1 {
            match (&self.d, &self.c) {
                (Some(d), Some(c)) if d.len() != c.len() => {
                    return err(format!("d has {} entries but c has {}", d.len(), c.len()))
                }
                (Some(_), None) | (None, Some(_)) => {
                    return err("d and c must be given together".into())
                }
                _ => {}
            }
        }
        self.run_config(self.u)
            .validate()
            .or_else(|e| err(e.to_string()))
    }
}
