use std::path::{Path, PathBuf};

use bootperc::lattice::{Boundary, LatticeShape};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Sweep,
    Eta,
    Pc,
    Certify,
    Audit,
    Oracle,
    Path,
    Bounds,
}

/// A scalar or a list of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_p0")]
    pub p0: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "one")]
    pub b: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            lambda: default_lambda(),
            p0: default_p0(),
            delta: default_delta(),
            c: 1.0,
            b: 1.0,
        }
    }
}

fn default_lambda() -> f64 {
    bootperc::bounds::LAMBDA_2D
}

fn default_p0() -> f64 {
    bootperc::bounds::DEFAULT_P0
}

fn default_delta() -> f64 {
    0.01
}

fn one() -> f64 {
    1.0
}

/// One experiment, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default = "two")]
    pub d: usize,
    #[serde(default)]
    pub n: Option<OneOrMany<usize>>,
    #[serde(default = "torus")]
    pub boundary: String,
    #[serde(default)]
    pub r: Option<usize>,
    #[serde(default)]
    pub p: Option<OneOrMany<f64>>,
    #[serde(default = "one_trial")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub t: Option<OneOrMany<usize>>,
    #[serde(default)]
    pub t_prime: u64,
    #[serde(default)]
    pub m: Option<OneOrMany<usize>>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Lower corner of the planted box, 1-based.
    #[serde(default)]
    pub position: Option<Vec<i64>>,
    /// Long axis of the planted box, 1-based.
    #[serde(default = "one_axis")]
    pub axis: usize,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn two() -> usize {
    2
}

fn torus() -> String {
    "torus".into()
}

fn one_trial() -> usize {
    1
}

fn default_tol() -> f64 {
    0.005
}

fn one_axis() -> usize {
    1
}

/// Scalar overrides given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(field: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("field `{field}`: {msg}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.master_seed = seed;
        }
        if let Some(trials) = o.trials {
            self.trials = trials;
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
    }

    pub fn boundary(&self) -> Result<Boundary, ConfigError> {
        self.boundary.parse().map_err(|e| bad("boundary", e))
    }

    /// `r`, defaulting to `d`.
    pub fn r(&self) -> usize {
        self.r.unwrap_or(self.d)
    }

    pub fn ns(&self) -> Result<Vec<usize>, ConfigError> {
        non_empty("n", self.n.as_ref())
    }

    pub fn ps(&self) -> Result<Vec<f64>, ConfigError> {
        non_empty("p", self.p.as_ref())
    }

    pub fn ts(&self) -> Result<Vec<usize>, ConfigError> {
        non_empty("t", self.t.as_ref())
    }

    pub fn ms(&self) -> Result<Vec<usize>, ConfigError> {
        non_empty("m", self.m.as_ref())
    }

    pub fn shapes(&self) -> Result<Vec<LatticeShape>, ConfigError> {
        let boundary = self.boundary()?;
        self.ns()?
            .into_iter()
            .map(|n| LatticeShape::new(self.d, n, boundary).map_err(|e| bad("n", e)))
            .collect()
    }

    /// Domain checks shared by all commands; per-command requirements are
    /// checked when the command reads the field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.d == 0 {
            return Err(bad("d", "must be at least 1"));
        }
        if self.r == Some(0) {
            return Err(bad("r", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(bad("trials", "must be at least 1"));
        }
        self.boundary()?;
        if let Some(ps) = &self.p {
            if let Some(p) = ps.to_vec().into_iter().find(|p| !(0.0..=1.0).contains(p)) {
                return Err(bad("p", format!("{p} is outside [0, 1]")));
            }
        }
        if let Some(ns) = &self.n {
            if ns.to_vec().contains(&0) {
                return Err(bad("n", "must be at least 1"));
            }
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(bad("tol", "must lie in (0, 1)"));
        }
        if self.axis == 0 || self.axis > self.d {
            return Err(bad("axis", format!("must lie in 1..={}", self.d)));
        }
        if let Some(pos) = &self.position {
            if pos.len() != self.d {
                return Err(bad("position", format!("needs {} coordinates", self.d)));
            }
        }
        let k = &self.constants;
        if !(k.delta > 0.0 && k.delta < 1.0) {
            return Err(bad("constants.delta", "must lie in (0, 1)"));
        }
        if !(k.p0 > 0.0 && k.p0 <= 1.0) {
            return Err(bad("constants.p0", "must lie in (0, 1]"));
        }
        if !(k.lambda > 0.0) || !k.lambda.is_finite() {
            return Err(bad("constants.lambda", "must be positive"));
        }
        if !(k.c >= 0.0) || !(k.b >= 0.0) {
            return Err(bad("constants", "c and b must be nonnegative"));
        }
        Ok(())
    }
}

fn non_empty<T: Clone>(field: &str, v: Option<&OneOrMany<T>>) -> Result<Vec<T>, ConfigError> {
    let v = v.map(OneOrMany::to_vec).unwrap_or_default();
    if v.is_empty() {
        Err(bad(field, "is required and must be nonempty"))
    } else {
        Ok(v)
    }
}
