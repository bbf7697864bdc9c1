//! Batch experiment runner behind the `latmax` binary.
//!
//! A configuration file lists instances, experiments (instance × algorithm ×
//! ε × seeds) and ratio assertions. Every experiment cell becomes one CSV row.

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bruteforce::{brute_force_opt_with_limit, Constraint, DEFAULT_POINT_LIMIT};
use crate::cardinality::{maximize_dr_cardinality, maximize_lattice_cardinality};
use crate::error::{Error, Result};
use crate::instances::{BuiltConstraint, InstanceSpec};
use crate::knapsack::maximize_knapsack;
use crate::lattice::LatticePoint;
use crate::oracle::ValueOracle;
use crate::polymatroid::maximize_polymatroid;
use crate::search::derive_seed;
use crate::solver::{SolverConfig, SolverOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    DrCardinality,
    LatticeCardinality,
    Polymatroid,
    Knapsack,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::DrCardinality => "dr_cardinality",
            Algorithm::LatticeCardinality => "lattice_cardinality",
            Algorithm::Polymatroid => "polymatroid",
            Algorithm::Knapsack => "knapsack",
        }
    }

    fn constraint_kind(self) -> &'static str {
        match self {
            Algorithm::DrCardinality | Algorithm::LatticeCardinality => "cardinality",
            Algorithm::Polymatroid => "polymatroid",
            Algorithm::Knapsack => "knapsack",
        }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_repeats() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub instance: String,
    pub algorithm: Algorithm,
    pub epsilon: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Independent polymatroid runs per cell; the best rounded value is kept.
    #[serde(default = "default_repeats")]
    pub repeats: u32,
}

/// Requires ratio ≥ min_ratio on every matching row. Missing filters match
/// everything.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    #[serde(default)]
    pub instance: Option<String>,
    #[serde(default)]
    pub algorithm: Option<Algorithm>,
    pub min_ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    #[serde(default)]
    pub instances: Vec<InstanceSpec>,
    #[serde(default)]
    pub experiments: Vec<Experiment>,
    #[serde(default)]
    pub assertions: Vec<Assertion>,
}

impl HarnessConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed_override: Option<u64>,
    /// Substring filter on algorithm names.
    pub algo_filter: Option<String>,
    pub bruteforce: bool,
    pub timing: bool,
    pub point_limit: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed_override: None,
            algo_filter: None,
            bruteforce: true,
            timing: true,
            point_limit: DEFAULT_POINT_LIMIT,
        }
    }
}

/// One report row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverReport {
    pub instance_id: String,
    pub algorithm: String,
    pub epsilon: f64,
    pub seed: u64,
    pub solution: Option<LatticePoint>,
    pub value: Option<f64>,
    pub opt_value: Option<f64>,
    pub ratio: Option<f64>,
    pub oracle_calls: u64,
    pub wall_time_ms: u64,
    /// Solver or brute-force failure for this cell.
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssertionOutcome {
    pub instance: Option<String>,
    pub algorithm: Option<String>,
    pub min_ratio: f64,
    pub rows_checked: usize,
    pub skipped: bool,
    pub passed: bool,
    /// Row indices (0-based, header excluded) that failed.
    pub failing_rows: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub reports: Vec<SolverReport>,
    pub assertions: Vec<AssertionOutcome>,
}

impl RunResult {
    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

struct Built {
    f: ValueOracle,
    constraint: BuiltConstraint,
}

impl Built {
    fn fresh_constraint(&self) -> BuiltConstraint {
        match &self.constraint {
            BuiltConstraint::Cardinality(c) => BuiltConstraint::Cardinality(c.clone()),
            BuiltConstraint::Knapsack(k) => BuiltConstraint::Knapsack(k.clone()),
            BuiltConstraint::Polymatroid(p) => BuiltConstraint::Polymatroid(p.fresh()),
        }
    }
}

fn view(c: &BuiltConstraint) -> Constraint<'_> {
    match c {
        BuiltConstraint::Cardinality(c) => Constraint::Cardinality(c),
        BuiltConstraint::Knapsack(k) => Constraint::Knapsack(k),
        BuiltConstraint::Polymatroid(p) => Constraint::Polymatroid(p),
    }
}

struct Cell<'a> {
    instance: &'a str,
    built: &'a Built,
    exp: &'a Experiment,
    seed: u64,
}

fn solve(f: &ValueOracle, c: &BuiltConstraint, exp: &Experiment, seed: u64) -> Result<SolverOutcome> {
    let cfg = SolverConfig::new(exp.epsilon, seed)?;
    match (exp.algorithm, c) {
        (Algorithm::DrCardinality, BuiltConstraint::Cardinality(c)) => maximize_dr_cardinality(f, c, &cfg),
        (Algorithm::LatticeCardinality, BuiltConstraint::Cardinality(c)) => maximize_lattice_cardinality(f, c, &cfg),
        (Algorithm::Knapsack, BuiltConstraint::Knapsack(k)) => Ok(maximize_knapsack(f, k, &cfg)?.best),
        (Algorithm::Polymatroid, BuiltConstraint::Polymatroid(p)) => {
            let mut best: Option<SolverOutcome> = None;
            for r in 0..exp.repeats.max(1) {
                let s = if r == 0 { seed } else { derive_seed(seed, r as u64) };
                let out = maximize_polymatroid(f, p, &SolverConfig::new(exp.epsilon, s)?)?;
                if best.as_ref().is_none_or(|b| out.value > b.value) {
                    best = Some(out);
                }
            }
            Ok(best.expect("at least one repeat"))
        }
        (a, c) => Err(Error::Config(format!(
            "algorithm {} needs a {} constraint, found {}",
            a.name(),
            a.constraint_kind(),
            c.kind()
        ))),
    }
}

fn run_cell(cell: &Cell<'_>, opts: &RunOptions) -> SolverReport {
    let f = cell.built.f.fresh();
    let constraint = cell.built.fresh_constraint();
    let mut report = SolverReport {
        instance_id: cell.instance.to_string(),
        algorithm: cell.exp.algorithm.name().to_string(),
        epsilon: SolverConfig::new(cell.exp.epsilon, 0).map(|c| c.epsilon()).unwrap_or(cell.exp.epsilon),
        seed: cell.seed,
        solution: None,
        value: None,
        opt_value: None,
        ratio: None,
        oracle_calls: 0,
        wall_time_ms: 0,
        note: None,
    };
    let start = Instant::now();
    let outcome = solve(&f, &constraint, cell.exp, cell.seed);
    if opts.timing {
        report.wall_time_ms = start.elapsed().as_millis() as u64;
    }
    report.oracle_calls = f.calls();
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            report.note = Some(e.to_string());
            return report;
        }
    };
    let value = match cell.built.f.fresh().eval(&outcome.solution) {
        Ok(v) => v,
        Err(e) => {
            report.note = Some(format!("re-evaluation failed: {e}"));
            return report;
        }
    };
    report.epsilon = outcome.epsilon;
    report.value = Some(value);
    report.solution = Some(outcome.solution);
    if opts.bruteforce {
        let exact_constraint = cell.built.fresh_constraint();
        match brute_force_opt_with_limit(&cell.built.f.fresh(), view(&exact_constraint), opts.point_limit) {
            Ok(exact) => {
                report.opt_value = Some(exact.opt_value);
                if exact.opt_value > 0.0 {
                    report.ratio = Some(value / exact.opt_value);
                }
            }
            Err(e) => report.note = Some(e.to_string()),
        }
    }
    report
}

fn evaluate_assertions(asserts: &[Assertion], rows: &[SolverReport], opts: &RunOptions) -> Vec<AssertionOutcome> {
    asserts
        .iter()
        .map(|a| {
            let matching: Vec<usize> = rows
                .iter()
                .enumerate()
                .filter(|(_, r)| a.instance.as_ref().is_none_or(|i| *i == r.instance_id))
                .filter(|(_, r)| a.algorithm.is_none_or(|al| al.name() == r.algorithm))
                .map(|(i, _)| i)
                .collect();
            let mut out = AssertionOutcome {
                instance: a.instance.clone(),
                algorithm: a.algorithm.map(|al| al.name().to_string()),
                min_ratio: a.min_ratio,
                rows_checked: matching.len(),
                skipped: !opts.bruteforce,
                passed: true,
                failing_rows: Vec::new(),
            };
            if out.skipped {
                return out;
            }
            for i in matching {
                let r = &rows[i];
                let ok = match (r.value, r.opt_value) {
                    (Some(v), Some(opt)) => opt == 0.0 || v >= a.min_ratio * opt - 1e-9,
                    _ => false,
                };
                if !ok {
                    out.failing_rows.push(i);
                }
            }
            out.passed = out.failing_rows.is_empty();
            out
        })
        .collect()
}

/// Builds every instance, runs all selected cells and evaluates assertions.
/// Configuration and ingestion problems are errors; solver failures are
/// recorded in the affected rows.
pub fn run(cfg: &HarnessConfig, opts: &RunOptions) -> Result<RunResult> {
    let mut built: HashMap<&str, Built> = HashMap::new();
    for spec in &cfg.instances {
        if built.contains_key(spec.id.as_str()) {
            return Err(Error::Config(format!("duplicate instance id {:?}", spec.id)));
        }
        let (f, constraint) = spec.build().map_err(|e| Error::Config(format!("instance {:?}: {e}", spec.id)))?;
        built.insert(spec.id.as_str(), Built { f, constraint });
    }
    let mut cells = Vec::new();
    for exp in &cfg.experiments {
        let b = built
            .get(exp.instance.as_str())
            .ok_or_else(|| Error::Config(format!("experiment refers to unknown instance {:?}", exp.instance)))?;
        if exp.algorithm.constraint_kind() != b.constraint.kind() {
            return Err(Error::Config(format!(
                "experiment on {:?}: algorithm {} needs a {} constraint, found {}",
                exp.instance,
                exp.algorithm.name(),
                exp.algorithm.constraint_kind(),
                b.constraint.kind()
            )));
        }
        if let Some(filter) = &opts.algo_filter {
            if !exp.algorithm.name().contains(filter.as_str()) {
                continue;
            }
        }
        let seeds = match opts.seed_override {
            Some(s) => vec![s],
            None => exp.seeds.clone(),
        };
        for seed in seeds {
            cells.push(Cell { instance: exp.instance.as_str(), built: b, exp, seed });
        }
    }
    let reports: Vec<SolverReport> = cells.par_iter().map(|c| run_cell(c, opts)).collect();
    let assertions = evaluate_assertions(&cfg.assertions, &reports, opts);
    Ok(RunResult { reports, assertions })
}

pub const CSV_HEADER: [&str; 10] = [
    "instance_id",
    "algorithm",
    "epsilon",
    "seed",
    "value",
    "opt_value",
    "ratio",
    "oracle_calls",
    "wall_time_ms",
    "solution",
];

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: std::io::Write>(out: W, reports: &[SolverReport]) -> Result<()> {
    let io = |e: csv::Error| Error::Config(format!("cannot write report: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in reports {
        w.write_record([
            r.instance_id.clone(),
            r.algorithm.clone(),
            r.epsilon.to_string(),
            r.seed.to_string(),
            opt_num(r.value),
            opt_num(r.opt_value),
            opt_num(r.ratio),
            r.oracle_calls.to_string(),
            r.wall_time_ms.to_string(),
            r.solution.as_ref().map(|s| s.to_joined()).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("cannot write report: {e}")))?;
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    cells: usize,
    failed_cells: usize,
    all_assertions_passed: bool,
    assertions: &'a [AssertionOutcome],
    notes: Vec<CellNote<'a>>,
}

#[derive(Serialize)]
struct CellNote<'a> {
    row: usize,
    instance_id: &'a str,
    algorithm: &'a str,
    seed: u64,
    message: &'a str,
}

pub fn summary_toml(result: &RunResult) -> Result<String> {
    let notes: Vec<CellNote<'_>> = result
        .reports
        .iter()
        .enumerate()
        .filter_map(|(row, r)| {
            r.note.as_deref().map(|message| CellNote {
                row,
                instance_id: &r.instance_id,
                algorithm: &r.algorithm,
                seed: r.seed,
                message,
            })
        })
        .collect();
    let summary = Summary {
        cells: result.reports.len(),
        failed_cells: result.reports.iter().filter(|r| r.value.is_none()).count(),
        all_assertions_passed: result.all_passed(),
        assertions: &result.assertions,
        notes,
    };
    toml::to_string(&summary).map_err(|e| Error::Config(format!("cannot write summary: {e}")))
}

/// Writes `report.csv` and `summary.toml` into `dir`.
pub fn write_outputs(dir: &Path, result: &RunResult) -> Result<()> {
    let io = |e: std::io::Error| Error::Config(format!("cannot write to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let file = std::fs::File::create(dir.join("report.csv")).map_err(io)?;
    write_csv(std::io::BufWriter::new(file), &result.reports)?;
    std::fs::write(dir.join("summary.toml"), summary_toml(result)?).map_err(io)?;
    Ok(())
}
