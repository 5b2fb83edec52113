//! Stochastic trial environment, single-run driver and replication harness.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::oracle::{worst_case_pics_loss, worst_case_variance_loss};
use crate::policy::{init_phase_sequence, AllocationPolicy, Policy, PolicyConfig, PolicyKind};
use crate::trial::{ArmId, DatasetSpec, TrialState};

/// Which worst-case loss a run records at its checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Largest per-subpopulation sum of `σ²_ij / n_ij`.
    Variance,
    /// Largest per-subpopulation probability of incorrect selection.
    Pics,
}

impl Objective {
    pub fn id(self) -> &'static str {
        match self {
            Objective::Variance => "variance",
            Objective::Pics => "pics",
        }
    }

    /// Worst-case loss at `counts`, evaluated with the true parameters of `spec`.
    pub fn loss(self, spec: &DatasetSpec, counts: &Grid<f64>) -> f64 {
        match self {
            Objective::Variance => worst_case_variance_loss(spec, counts),
            Objective::Pics => worst_case_pics_loss(spec, counts),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variance" => Ok(Objective::Variance),
            "pics" => Ok(Objective::Pics),
            other => Err(Error::UnknownObjective(other.to_string())),
        }
    }
}

/// `start, start + every, …`, always ending at `budget`.
pub fn checkpoint_grid(start: usize, budget: usize, every: usize) -> Vec<usize> {
    let every = every.max(1);
    let mut grid: Vec<usize> = (start..=budget).step_by(every).collect();
    if grid.last() != Some(&budget) && start <= budget {
        grid.push(budget);
    }
    grid
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub policy: PolicyKind,
    pub policy_config: PolicyConfig,
    pub budget: usize,
    pub checkpoints: Vec<usize>,
    pub seed: u64,
    pub objective: Objective,
}

impl RunConfig {
    pub const DEFAULT_CHECKPOINT_EVERY: usize = 5;
    pub const DEFAULT_SEED: u64 = 42;

    /// Default policy settings, seed 42 and a checkpoint every 5 pulls after initialization.
    pub fn new(dataset: DatasetSpec, policy: PolicyKind, budget: usize, objective: Objective) -> Self {
        let policy_config = PolicyConfig::default();
        let init = policy_config.init_pulls * dataset.arm_count();
        Self {
            checkpoints: checkpoint_grid(init, budget, Self::DEFAULT_CHECKPOINT_EVERY),
            dataset,
            policy,
            policy_config,
            budget,
            seed: Self::DEFAULT_SEED,
            objective,
        }
    }

    /// Pulls consumed by the initialization phase, `B·C·K`.
    pub fn init_pulls_total(&self) -> usize {
        self.policy_config.init_pulls * self.dataset.arm_count()
    }

    pub fn validate(&self) -> Result<()> {
        self.policy_config.validate()?;
        let init = self.init_pulls_total();
        if self.budget < init {
            return Err(invalid(format!(
                "budget {} is smaller than the initialization phase ({init} pulls)",
                self.budget
            )));
        }
        if self.checkpoints.is_empty() {
            return Err(invalid("at least one checkpoint is required"));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("checkpoints must be strictly increasing"));
        }
        let (first, last) = (self.checkpoints[0], *self.checkpoints.last().unwrap());
        if first < init || last > self.budget {
            return Err(invalid(format!(
                "checkpoints must lie in [{init}, {}], got [{first}, {last}]",
                self.budget
            )));
        }
        Ok(())
    }
}

/// Loss and interim estimates after `n` pulls.
#[derive(Debug, Clone, PartialEq)]
pub struct LossPoint {
    pub n: usize,
    pub loss: f64,
    pub itr: Vec<usize>,
    pub counts: Grid<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossTrajectory {
    pub points: Vec<LossPoint>,
    pub final_itr: Vec<usize>,
    pub final_counts: Grid<u64>,
}

/// One normal response draw for `arm`.
pub fn sample_response<R: Rng + ?Sized>(spec: &DatasetSpec, arm: ArmId, rng: &mut R) -> f64 {
    let mean = spec.means()[(arm.i, arm.j)];
    let sd = spec.variances()[(arm.i, arm.j)].sqrt();
    Normal::new(mean, sd).expect("positive variance").sample(rng)
}

/// Random stream for replication `rep` of a run seeded with `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Runs the initialization phase and then `policy` until `budget` pulls are
/// spent, recording the loss at each checkpoint.
pub fn run_with_policy(
    spec: &DatasetSpec,
    policy: &mut dyn AllocationPolicy,
    init_pulls: usize,
    budget: usize,
    checkpoints: &[usize],
    objective: Objective,
    rng: &mut dyn RngCore,
) -> Result<LossTrajectory> {
    let init = init_phase_sequence(spec.subpopulations(), spec.treatments(), init_pulls);
    if budget < init.len() {
        return Err(invalid(format!(
            "budget {budget} is smaller than the initialization phase ({} pulls)",
            init.len()
        )));
    }
    let mut state = TrialState::for_spec(spec, budget)?;
    let mut points = Vec::with_capacity(checkpoints.len());
    let mut pending = checkpoints.iter().copied().peekable();

    let mut pull = |state: &mut TrialState, arm: ArmId, rng: &mut dyn RngCore| -> Result<()> {
        let response = sample_response(spec, arm, rng);
        state.record(arm, response)?;
        while pending.peek() == Some(&state.total_pulls()) {
            let n = pending.next().unwrap();
            let counts = state.counts();
            points.push(LossPoint {
                n,
                loss: objective.loss(spec, &counts.map(|&c| c as f64)),
                itr: state.recommend_itr(),
                counts,
            });
        }
        Ok(())
    };

    for arm in init {
        pull(&mut state, arm, rng)?;
    }
    while state.remaining() > 0 {
        let decision = policy.decide(&state, rng);
        if decision.arms.is_empty() {
            return Err(invalid("policy returned an empty decision"));
        }
        let take = decision.arms.len().min(state.remaining());
        for &arm in &decision.arms[..take] {
            pull(&mut state, arm, rng)?;
        }
    }

    Ok(LossTrajectory {
        points,
        final_itr: state.recommend_itr(),
        final_counts: state.counts(),
    })
}

fn run_replication(config: &RunConfig, rep: u64) -> Result<LossTrajectory> {
    let mut policy = Policy::new(config.policy, &config.policy_config, &config.dataset)?;
    let mut rng = replication_rng(config.seed, rep);
    run_with_policy(
        &config.dataset,
        &mut policy,
        config.policy_config.init_pulls,
        config.budget,
        &config.checkpoints,
        config.objective,
        &mut rng,
    )
}

/// One trial run (replication 0 of `config.seed`).
pub fn run_trial(config: &RunConfig) -> Result<LossTrajectory> {
    config.validate()?;
    run_replication(config, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Replicated runs plus per-checkpoint aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationSet {
    pub checkpoints: Vec<usize>,
    pub runs: Vec<LossTrajectory>,
    pub mean_loss: Vec<f64>,
    /// Max over subpopulations of the fraction of runs whose interim
    /// recommendation for that subpopulation is not a truly best treatment.
    pub empirical_error: Vec<f64>,
    /// Fraction of runs with at least one wrong subpopulation.
    pub empirical_error_any: Vec<f64>,
    pub mean_counts: Vec<Grid<f64>>,
}

pub fn replicate(config: &RunConfig, reps: usize) -> Result<ReplicationSet> {
    replicate_with(config, reps, Execution::Parallel)
}

/// Runs `reps` replications; replication `r` draws from stream `r` of
/// `config.seed`, so the result does not depend on `execution`.
pub fn replicate_with(config: &RunConfig, reps: usize, execution: Execution) -> Result<ReplicationSet> {
    if reps == 0 {
        return Err(invalid("at least one replication is required"));
    }
    config.validate()?;
    let runs: Vec<LossTrajectory> = match execution {
        Execution::Serial => (0..reps as u64)
            .map(|r| run_replication(config, r))
            .collect::<Result<_>>()?,
        Execution::Parallel => (0..reps as u64)
            .into_par_iter()
            .map(|r| run_replication(config, r))
            .collect::<Result<_>>()?,
    };
    Ok(aggregate(&config.dataset, config.checkpoints.clone(), runs))
}

/// Per subpopulation, whether `chosen[i]` falls short of the best true mean.
pub fn selection_errors(spec: &DatasetSpec, chosen: &[usize]) -> Vec<bool> {
    spec.means()
        .iter_rows()
        .zip(chosen)
        .map(|(row, &j)| {
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            row[j] < best
        })
        .collect()
}

pub fn aggregate(spec: &DatasetSpec, checkpoints: Vec<usize>, runs: Vec<LossTrajectory>) -> ReplicationSet {
    let reps = runs.len() as f64;
    let c = spec.subpopulations();
    let k = spec.treatments();
    let mut mean_loss = Vec::with_capacity(checkpoints.len());
    let mut empirical_error = Vec::with_capacity(checkpoints.len());
    let mut empirical_error_any = Vec::with_capacity(checkpoints.len());
    let mut mean_counts = Vec::with_capacity(checkpoints.len());

    for idx in 0..checkpoints.len() {
        let mut loss_sum = 0.0;
        let mut wrong = vec![0usize; c];
        let mut any = 0usize;
        let mut counts = Grid::filled(c, k, 0.0);
        for run in &runs {
            let point = &run.points[idx];
            loss_sum += point.loss;
            let errs = selection_errors(spec, &point.itr);
            for (w, e) in wrong.iter_mut().zip(&errs) {
                *w += *e as usize;
            }
            any += errs.iter().any(|&e| e) as usize;
            for i in 0..c {
                for j in 0..k {
                    counts[(i, j)] += point.counts[(i, j)] as f64;
                }
            }
        }
        mean_loss.push(loss_sum / reps);
        empirical_error.push(wrong.iter().copied().max().unwrap_or(0) as f64 / reps);
        empirical_error_any.push(any as f64 / reps);
        mean_counts.push(counts.map(|&x| x / reps));
    }

    ReplicationSet {
        checkpoints,
        runs,
        mean_loss,
        empirical_error,
        empirical_error_any,
        mean_counts,
    }
}
