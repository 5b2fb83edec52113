//! Experiment plans and their CSV output.
//!
//! Each dataset in a plan contributes, in order:
//!
//! 1. `oracle` rows: the optimal loss at every checkpoint `n` (the closed-form
//!    variance optimum, or the exact selection error at surrogate-optimal
//!    counts) together with the oracle counts;
//! 2. for each policy, one row per `(replication, n)` with that run's loss,
//!    its own 0/1 selection-error indicator and realized counts;
//! 3. for each policy, one `mean` row per `n` with the replication-averaged
//!    loss, the two empirical error rates and mean counts.
//!
//! Reals are written with 17 significant digits; the infinite-loss sentinel
//! is written as `inf`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::datasets::{builtin_dataset, reference_budget};
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::oracle::{
    pics_surrogate_allocation, variance_oracle_allocation, variance_oracle_loss, worst_case_pics_loss,
};
use crate::policy::{ArmOrdering, PolicyConfig, PolicyKind};
use crate::simulate::{checkpoint_grid, replicate_with, selection_errors, Execution, Objective, RunConfig};
use crate::trial::DatasetSpec;

pub const CSV_FIXED_COLUMNS: [&str; 9] = [
    "dataset",
    "policy",
    "objective",
    "replication",
    "seed",
    "n",
    "loss",
    "empirical_error_max",
    "empirical_error_any",
];

/// A policy together with its arm ordering (only meaningful for `gafs-max`).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEntry {
    pub kind: PolicyKind,
    pub ordering: ArmOrdering,
}

impl PolicyEntry {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            ordering: ArmOrdering::Natural,
        }
    }

    pub fn with_ordering(kind: PolicyKind, ordering: ArmOrdering) -> Self {
        Self { kind, ordering }
    }

    /// Label written to the `policy` column.
    pub fn label(&self) -> String {
        let id = self.kind.id();
        if self.kind != PolicyKind::GafsMax {
            return id.to_string();
        }
        match self.ordering {
            ArmOrdering::Natural => id.to_string(),
            ArmOrdering::Reversed => format!("{id}-reversed"),
            ArmOrdering::Custom(_) => format!("{id}-custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub datasets: Vec<String>,
    pub policies: Vec<PolicyEntry>,
    /// Total budget; `None` uses each dataset's reference budget.
    pub budget: Option<usize>,
    /// Explicit checkpoint grid; `None` means every `checkpoint_every` pulls after initialization.
    pub checkpoints: Option<Vec<usize>>,
    pub checkpoint_every: usize,
    pub reps: usize,
    pub seed: u64,
    pub objective: Objective,
    pub epsilon: f64,
    pub init_pulls: usize,
    pub execution: Execution,
}

impl ExperimentPlan {
    pub fn new(datasets: &[&str], policies: Vec<PolicyEntry>, objective: Objective) -> Self {
        let defaults = PolicyConfig::default();
        Self {
            datasets: datasets.iter().map(|s| s.to_string()).collect(),
            policies,
            budget: None,
            checkpoints: None,
            checkpoint_every: RunConfig::DEFAULT_CHECKPOINT_EVERY,
            reps: 100,
            seed: RunConfig::DEFAULT_SEED,
            objective,
            epsilon: defaults.epsilon,
            init_pulls: defaults.init_pulls,
            execution: Execution::Parallel,
        }
    }

    fn resolve_datasets(&self) -> Result<Vec<DatasetSpec>> {
        self.datasets.iter().map(|n| builtin_dataset(n)).collect()
    }

    fn budget_for(&self, spec: &DatasetSpec) -> Result<usize> {
        self.budget
            .or_else(|| reference_budget(spec.name()))
            .ok_or_else(|| invalid(format!("no budget given for dataset {}", spec.name())))
    }

    fn checkpoints_for(&self, spec: &DatasetSpec, budget: usize) -> Vec<usize> {
        match &self.checkpoints {
            Some(grid) => grid.clone(),
            None => checkpoint_grid(self.init_pulls * spec.arm_count(), budget, self.checkpoint_every),
        }
    }

    /// Run configuration for one dataset and policy of the plan.
    pub fn run_config(&self, spec: &DatasetSpec, entry: &PolicyEntry) -> Result<RunConfig> {
        let budget = self.budget_for(spec)?;
        let config = RunConfig {
            dataset: spec.clone(),
            policy: entry.kind,
            policy_config: PolicyConfig {
                epsilon: self.epsilon,
                init_pulls: self.init_pulls,
                ordering: entry.ordering.clone(),
            },
            budget,
            checkpoints: self.checkpoints_for(spec, budget),
            seed: self.seed,
            objective: self.objective,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() || self.policies.is_empty() {
            return Err(invalid("a plan needs at least one dataset and one policy"));
        }
        if self.reps == 0 {
            return Err(invalid("at least one replication is required"));
        }
        for spec in self.resolve_datasets()? {
            for entry in &self.policies {
                self.run_config(&spec, entry)?;
            }
        }
        Ok(())
    }
}

/// Formats a real with 17 significant digits; `inf` for the infinite sentinel.
pub fn format_real(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

/// Full header for count columns up to `c` subpopulations and `k` treatments (1-based).
pub fn csv_header(c: usize, k: usize) -> Vec<String> {
    CSV_FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((1..=c).flat_map(|i| (1..=k).map(move |j| format!("count_{i}_{j}"))))
        .collect()
}

struct RowWriter<W: Write> {
    csv: csv::Writer<W>,
    max_c: usize,
    max_k: usize,
}

impl<W: Write> RowWriter<W> {
    fn write(&mut self, fixed: [String; 9], counts: Grid<String>) -> Result<()> {
        let mut record: Vec<String> = fixed.into();
        for i in 0..self.max_c {
            for j in 0..self.max_k {
                let cell = if i < counts.rows() && j < counts.cols() {
                    counts[(i, j)].clone()
                } else {
                    String::new()
                };
                record.push(cell);
            }
        }
        self.csv.write_record(&record)?;
        Ok(())
    }
}

fn oracle_row(spec: &DatasetSpec, objective: Objective, n: usize) -> Result<(f64, Grid<f64>)> {
    Ok(match objective {
        Objective::Variance => (variance_oracle_loss(spec, n)?, variance_oracle_allocation(spec, n)?),
        Objective::Pics => {
            let counts = pics_surrogate_allocation(spec, n)?;
            (worst_case_pics_loss(spec, &counts), counts)
        }
    })
}

/// Runs every (dataset, policy) pair of `plan` and streams the CSV to `out`.
pub fn run_experiment<W: Write>(plan: &ExperimentPlan, out: W) -> Result<()> {
    plan.validate()?;
    let specs = plan.resolve_datasets()?;
    let max_c = specs.iter().map(DatasetSpec::subpopulations).max().unwrap_or(0);
    let max_k = specs.iter().map(DatasetSpec::treatments).max().unwrap_or(0);
    let mut writer = RowWriter {
        csv: csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out),
        max_c,
        max_k,
    };
    writer.csv.write_record(csv_header(max_c, max_k))?;

    let objective = plan.objective.id().to_string();
    let seed = plan.seed.to_string();
    for spec in &specs {
        let name = spec.name().to_string();
        let budget = plan.budget_for(spec)?;
        for &n in &plan.checkpoints_for(spec, budget) {
            let (loss, counts) = oracle_row(spec, plan.objective, n)?;
            writer.write(
                [
                    name.clone(),
                    "oracle".into(),
                    objective.clone(),
                    "oracle".into(),
                    seed.clone(),
                    n.to_string(),
                    format_real(loss),
                    String::new(),
                    String::new(),
                ],
                counts.map(|&x| format_real(x)),
            )?;
        }

        for entry in &plan.policies {
            let config = plan.run_config(spec, entry)?;
            let set = replicate_with(&config, plan.reps, plan.execution)?;
            let label = entry.label();
            for (rep, run) in set.runs.iter().enumerate() {
                for point in &run.points {
                    let wrong = selection_errors(spec, &point.itr).iter().any(|&e| e);
                    let indicator = if wrong { "1" } else { "0" };
                    writer.write(
                        [
                            name.clone(),
                            label.clone(),
                            objective.clone(),
                            rep.to_string(),
                            seed.clone(),
                            point.n.to_string(),
                            format_real(point.loss),
                            indicator.into(),
                            indicator.into(),
                        ],
                        point.counts.map(|c| c.to_string()),
                    )?;
                }
            }
            for (idx, &n) in set.checkpoints.iter().enumerate() {
                writer.write(
                    [
                        name.clone(),
                        label.clone(),
                        objective.clone(),
                        "mean".into(),
                        seed.clone(),
                        n.to_string(),
                        format_real(set.mean_loss[idx]),
                        format_real(set.empirical_error[idx]),
                        format_real(set.empirical_error_any[idx]),
                    ],
                    set.mean_counts[idx].map(|&x| format_real(x)),
                )?;
            }
        }
    }
    writer.csv.flush().map_err(|e| Error::Csv(csv::Error::from(e)))?;
    Ok(())
}

/// Like [`run_experiment`], writing to a file at `path`.
pub fn run_experiment_to_path(plan: &ExperimentPlan, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    run_experiment(plan, &mut out)?;
    out.flush().map_err(io_err)
}
