//! Experiment configuration files.

use std::path::{Path, PathBuf};

use gk_core::{BanachNorm, DMatrix, Rigging};
use serde::{Deserialize, Serialize};

use crate::formats::{Num, RiggingSpec};
use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Verify,
    Yosida,
    Metric,
    Basis,
    H2bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Identity,
    RandomDiagonal,
    WienerLike,
    Explicit,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

/// One experiment: `ensemble × |dims| × |p_values|` cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub dims: Vec<usize>,
    #[serde(alias = "p")]
    pub p_values: Vec<Num>,
    pub ensemble: usize,
    pub seed: u64,
    pub rigging_family: Family,
    /// Required for the explicit family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rigging: Option<RiggingSpec>,
    /// Optional operator (rows) for the explicit family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambdas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ts: Vec<f64>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Largest dimension accepted from a config file.
pub const MAX_DIM: usize = 64;

fn invalid(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| invalid(format!("cannot parse config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn command(&self) -> Result<Command, LabError> {
        self.command.ok_or_else(|| invalid("no command given"))
    }

    pub fn case_count(&self) -> usize {
        self.ensemble * self.dims.len() * self.p_values.len()
    }

    /// Checks everything that can be checked before any computation.
    pub fn validate(&self) -> Result<(), LabError> {
        let command = self.command()?;
        if self.ensemble == 0 {
            return Err(invalid("ensemble must be at least 1"));
        }
        if self.dims.is_empty() {
            return Err(invalid("dims must be nonempty"));
        }
        if let Some(n) = self.dims.iter().find(|n| **n == 0 || **n > MAX_DIM) {
            return Err(invalid(format!("dimension {n} outside 1..={MAX_DIM}")));
        }
        if self.p_values.is_empty() {
            return Err(invalid("p_values must be nonempty"));
        }
        if let Some(p) = self.p_values.iter().find(|p| !(p.0 >= 1.0)) {
            return Err(invalid(format!("exponent {} is below 1", p.0)));
        }
        if command == Command::Yosida {
            validate_grids(&self.lambdas, &self.ts)?;
        } else if !self.ts.is_empty() {
            return Err(invalid("ts is only used by the yosida command"));
        }
        if !self.lambdas.is_empty() && command == Command::Verify {
            validate_grids(&self.lambdas, &[0.0])?;
        }

        match self.rigging_family {
            Family::Explicit => {
                let spec = self
                    .rigging
                    .as_ref()
                    .ok_or_else(|| invalid("explicit family needs a rigging"))?;
                let r = spec.build().map_err(|e| invalid(format!("rigging: {e}")))?;
                if self.dims.iter().any(|n| *n != r.n()) {
                    return Err(invalid(format!("dims must all equal the rigging dimension {}", r.n())));
                }
                let p = r.b_norm().p();
                if self.p_values.iter().any(|q| q.0 != p) {
                    return Err(invalid(format!("p_values must all equal the rigging exponent {p}")));
                }
                if let Some(rows) = &self.operator {
                    operator_matrix(rows, r.n())?;
                }
            }
            other => {
                if self.rigging.is_some() || self.operator.is_some() {
                    return Err(invalid(
                        "rigging and operator are only accepted for the explicit family",
                    ));
                }
                if other == Family::WienerLike && self.p_values.iter().any(|p| p.0 != f64::INFINITY) {
                    return Err(invalid(
                        "wiener-like riggings use the grid sup-norm; p_values must be [\"inf\"]",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Rigging of one case; `rng` is consumed only by the random family.
    pub fn rigging_for(&self, n: usize, p: f64, rng: &mut gk_core::ensemble::SeededRng) -> Result<Rigging, String> {
        let r = match self.rigging_family {
            Family::Identity => Rigging::diagonal(BanachNorm::lp(p), &vec![1.0; n], &vec![1.0; n]),
            Family::RandomDiagonal => Rigging::random_diagonal(n, BanachNorm::lp(p), rng),
            Family::WienerLike => Rigging::wiener_like(n),
            Family::Explicit => self
                .rigging
                .as_ref()
                .expect("validated explicit config")
                .build()
                .map_err(gk_core::Error::Shape),
        };
        r.map_err(|e| e.to_string())
    }

    pub fn explicit_operator(&self) -> Option<DMatrix<f64>> {
        let rows = self.operator.as_ref()?;
        operator_matrix(rows, rows.len()).ok()
    }
}

fn validate_grids(lambdas: &[f64], ts: &[f64]) -> Result<(), LabError> {
    if lambdas.is_empty() || ts.is_empty() {
        return Err(invalid("yosida needs nonempty lambdas and ts"));
    }
    if lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(invalid("lambdas must be finite and positive"));
    }
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("lambdas must be strictly increasing"));
    }
    if ts.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(invalid("ts must be finite and nonnegative"));
    }
    Ok(())
}

fn operator_matrix(rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>, LabError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(invalid(format!("operator must be {n}x{n}")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid("operator entries must be finite"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}
