//! Ensemble runner and aggregation.

use std::collections::BTreeMap;
use std::time::Instant;

use gk_core::adjoint::{check_h2_bound, check_lax, check_vonneumann};
use gk_core::approx::{check_metric, check_polar, check_yosida_identities, semigroup_experiment};
use gk_core::basis::{check_basis, markushevich};
use gk_core::ensemble::{self, SeededRng};
use gk_core::{DMatrix, DVector, Operator, PropertyReport, Rigging, Space};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Command, ExperimentConfig};
use crate::formats::{rows, BasisJson, Num, ReportJson, RiggingSpec, TableJson};
use crate::LabError;

/// Random inputs per case for the pointwise checks.
pub const POINTS_PER_CASE: usize = 16;
/// Samples used by the embedding check in `verify`.
pub const EMBEDDING_TRIALS: usize = 64;

/// `λ = 1, 2, 4, …, 1024`.
pub fn default_lambdas() -> Vec<f64> {
    (0..=10).map(|k| (1u64 << k) as f64).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Approximator {
    pub lambda: Num,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseRecord {
    pub index: usize,
    pub seed: u64,
    pub n: usize,
    pub p: Num,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rigging: Option<RiggingSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub reports: Vec<ReportJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<TableJson>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub approximators: Vec<Approximator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub case: usize,
    pub seed: u64,
    pub report: String,
    pub prop: String,
    pub defect: Num,
    pub witness: Vec<Num>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxDefect {
    pub defect: Num,
    pub case: usize,
    pub witness: Vec<Num>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Quantiles {
    pub count: usize,
    pub min: Num,
    pub q25: Num,
    pub median: Num,
    pub q75: Num,
    pub max: Num,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub cases: usize,
    pub cases_passed: usize,
    pub cases_errored: usize,
    /// `cases_passed / cases`.
    pub pass_rate: Num,
    pub assertions: usize,
    pub assertions_passed: usize,
    /// Largest defect of each asserted property, keyed `report.prop`.
    pub max_defects: BTreeMap<String, MaxDefect>,
    /// Quantiles of each finite measured quantity, keyed `report.quantity`.
    pub quantiles: BTreeMap<String, Quantiles>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub config: ExperimentConfig,
    pub cases: Vec<CaseRecord>,
    pub aggregate: Aggregate,
    /// Kept apart from the numeric payload, which is reproducible.
    pub timing: Timing,
}

impl ReportBundle {
    pub fn passed(&self) -> bool {
        self.aggregate.cases_passed == self.aggregate.cases
    }
}

struct CaseSpec {
    index: usize,
    seed: u64,
    n: usize,
    p: f64,
}

/// Runs every case of a validated config. Cases run in parallel; results do
/// not depend on scheduling.
pub fn run(config: &ExperimentConfig) -> Result<ReportBundle, LabError> {
    config.validate()?;
    let command = config.command()?;
    let start = Instant::now();
    let mut specs = Vec::with_capacity(config.case_count());
    for &n in &config.dims {
        for p in &config.p_values {
            for _ in 0..config.ensemble {
                let index = specs.len();
                specs.push(CaseSpec {
                    index,
                    seed: ensemble::member_seed(config.seed, index as u64),
                    n,
                    p: p.0,
                });
            }
        }
    }
    let cases: Vec<CaseRecord> = specs.par_iter().map(|s| run_case(config, command, s)).collect();
    let aggregate = aggregate(&cases);
    Ok(ReportBundle {
        config: config.clone(),
        cases,
        aggregate,
        timing: Timing {
            wall_clock_seconds: start.elapsed().as_secs_f64(),
        },
    })
}

#[derive(Default)]
struct Outcome {
    reports: Vec<PropertyReport>,
    table: Option<TableJson>,
    approximators: Vec<Approximator>,
    basis: Option<BasisJson>,
}

fn run_case(config: &ExperimentConfig, command: Command, spec: &CaseSpec) -> CaseRecord {
    let mut rng = ensemble::rng(spec.seed);
    let mut record = CaseRecord {
        index: spec.index,
        seed: spec.seed,
        n: spec.n,
        p: Num(spec.p),
        passed: false,
        rigging: None,
        error: None,
        reports: Vec::new(),
        table: None,
        approximators: Vec::new(),
        basis: None,
    };
    let rigging = match config.rigging_for(spec.n, spec.p, &mut rng) {
        Ok(r) => r,
        Err(e) => {
            record.error = Some(e);
            return record;
        }
    };
    record.rigging = Some(RiggingSpec::from_rigging(&rigging));
    match execute(config, command, &rigging, &mut rng, spec.seed) {
        Ok(out) => {
            record.passed = out.reports.iter().all(PropertyReport::passed);
            record.reports = out.reports.iter().map(ReportJson::from).collect();
            record.table = out.table;
            record.approximators = out.approximators;
            record.basis = out.basis;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

fn random_operator<'r>(r: &'r Rigging, rng: &mut SeededRng) -> Result<Operator<'r>, gk_core::Error> {
    Operator::new(r, ensemble::normal_matrix(rng, r.n()))
}

fn case_operator<'r>(
    config: &ExperimentConfig,
    r: &'r Rigging,
    rng: &mut SeededRng,
) -> Result<Operator<'r>, gk_core::Error> {
    match config.explicit_operator() {
        Some(m) => Operator::new(r, m),
        None => random_operator(r, rng),
    }
}

/// `e_i/‖e_i‖_B`.
pub fn unit_coordinate_inputs(r: &Rigging) -> Vec<DVector<f64>> {
    (0..r.n())
        .map(|i| {
            let mut e = DVector::zeros(r.n());
            e[i] = 1.0;
            let nrm = r.norm(&e, Space::B);
            e / nrm
        })
        .collect()
}

fn execute(
    config: &ExperimentConfig,
    command: Command,
    r: &Rigging,
    rng: &mut SeededRng,
    seed: u64,
) -> Result<Outcome, gk_core::Error> {
    let mut out = Outcome::default();
    let lambdas = if config.lambdas.is_empty() {
        default_lambdas()
    } else {
        config.lambdas.clone()
    };
    match command {
        Command::Verify => {
            let a = case_operator(config, r, rng)?;
            out.reports.push(r.check_embedding(EMBEDDING_TRIALS, seed));
            out.reports.push(check_vonneumann(&a, POINTS_PER_CASE, seed));
            let s = Operator::new(r, ensemble::h2_symmetric_matrix(rng, r.w2_inv()))?;
            out.reports.push(check_lax(&s)?);
            out.reports.push(check_polar(&a, POINTS_PER_CASE, seed)?);
            out.reports.push(check_yosida_identities(&a, &lambdas)?);
            let b = random_operator(r, rng)?;
            let c = random_operator(r, rng)?;
            out.reports.push(check_metric([&a, &b, &c])?);
        }
        Command::Yosida => {
            // random operators are scaled to unit Frobenius norm
            let a = match config.explicit_operator() {
                Some(m) => Operator::new(r, m)?,
                None => {
                    let m = ensemble::normal_matrix(rng, r.n());
                    let f = m.norm();
                    Operator::new(r, m / f)?
                }
            };
            let xs = unit_coordinate_inputs(r);
            let exp = semigroup_experiment(&a, &config.lambdas, &config.ts, &xs)?;
            out.reports.push(exp.report);
            out.reports.push(check_yosida_identities(&a, &config.lambdas)?);
            out.table = Some(TableJson::from(&exp.table));
            out.approximators = exp
                .approximators
                .iter()
                .map(|(l, m)| Approximator {
                    lambda: Num(*l),
                    matrix: rows(m),
                })
                .collect();
        }
        Command::Metric => {
            let a = case_operator(config, r, rng)?;
            let b = if config.explicit_operator().is_some() {
                Operator::zero(r)
            } else {
                random_operator(r, rng)?
            };
            let c = random_operator(r, rng)?;
            out.reports.push(check_metric([&a, &b, &c])?);
        }
        Command::Basis => {
            let b = markushevich(r)?;
            out.reports.push(check_basis(&b, seed));
            out.basis = Some(BasisJson::from(&b));
        }
        Command::H2bound => {
            let a = case_operator(config, r, rng)?;
            out.reports.push(check_h2_bound(&a));
        }
    }
    Ok(out)
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn aggregate(cases: &[CaseRecord]) -> Aggregate {
    let mut max_defects: BTreeMap<String, MaxDefect> = BTreeMap::new();
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut failures = Vec::new();
    let (mut assertions, mut assertions_passed) = (0, 0);
    for case in cases {
        for rep in &case.reports {
            for a in &rep.asserted {
                assertions += 1;
                assertions_passed += usize::from(a.pass);
                let key = format!("{}.{}", rep.name, a.prop);
                let slot = max_defects.entry(key).or_insert(MaxDefect {
                    defect: Num(f64::NEG_INFINITY),
                    case: case.index,
                    witness: Vec::new(),
                });
                if a.defect.0 > slot.defect.0 || (a.defect.0.is_nan() && !slot.defect.0.is_nan()) {
                    *slot = MaxDefect {
                        defect: a.defect,
                        case: case.index,
                        witness: a.witness.clone(),
                    };
                }
                if !a.pass {
                    failures.push(Failure {
                        case: case.index,
                        seed: case.seed,
                        report: rep.name.clone(),
                        prop: a.prop.clone(),
                        defect: a.defect,
                        witness: a.witness.clone(),
                    });
                }
            }
            for m in &rep.measured {
                if m.value.0.is_finite() {
                    values
                        .entry(format!("{}.{}", rep.name, m.quantity))
                        .or_default()
                        .push(m.value.0);
                }
            }
        }
    }
    let quantiles = values
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_by(f64::total_cmp);
            let q = Quantiles {
                count: v.len(),
                min: Num(v[0]),
                q25: Num(quantile(&v, 0.25)),
                median: Num(quantile(&v, 0.5)),
                q75: Num(quantile(&v, 0.75)),
                max: Num(v[v.len() - 1]),
            };
            (k, q)
        })
        .collect();
    let cases_passed = cases.iter().filter(|c| c.passed).count();
    Aggregate {
        cases: cases.len(),
        cases_passed,
        cases_errored: cases.iter().filter(|c| c.error.is_some()).count(),
        pass_rate: Num(cases_passed as f64 / cases.len().max(1) as f64),
        assertions,
        assertions_passed,
        max_defects,
        quantiles,
        failures,
    }
}

/// Approximator matrix for `λ` in a yosida case, if present.
pub fn approximator(case: &CaseRecord, lambda: f64) -> Option<DMatrix<f64>> {
    let a = case.approximators.iter().find(|a| a.lambda.0 == lambda)?;
    let n = a.matrix.len();
    Some(DMatrix::from_fn(n, n, |i, j| a.matrix[i][j]))
}
