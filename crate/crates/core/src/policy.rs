//! Online allocation policies.
//!
//! Every policy starts with the same round-robin initialization phase (each
//! arm pulled `B` times) and then picks arms adaptively until the budget is
//! spent:
//!
//! * `areoa` samples from the variance-optimal fractions computed with the
//!   estimated standard deviations, mixed with uniform exploration.
//! * `aarandom` draws a subpopulation by its population share and a
//!   treatment uniformly.
//! * `gafs-max` forces visits to arms with `n_ij < √n + 1` in a fixed order,
//!   otherwise pulls the arm with the largest `σ̂²_ij / n_ij`.
//! * `minmaxpics-seq` samples one arm from the surrogate-optimal selection
//!   error fractions computed with the estimated means and deviations.
//! * `minmaxpics-grp` samples a subpopulation from the same fractions and
//!   enrolls one patient per treatment in it.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::oracle::{pics_weights, PicsWeightRow};
use crate::trial::{sample_index, AllocationWeights, ArmId, DatasetSpec, TrialState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Areoa,
    AaRandom,
    GafsMax,
    MinmaxPicsSeq,
    MinmaxPicsGrp,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Areoa,
        PolicyKind::AaRandom,
        PolicyKind::GafsMax,
        PolicyKind::MinmaxPicsSeq,
        PolicyKind::MinmaxPicsGrp,
    ];

    /// Stable identifier used on the command line and in CSV output.
    pub fn id(self) -> &'static str {
        match self {
            PolicyKind::Areoa => "areoa",
            PolicyKind::AaRandom => "aarandom",
            PolicyKind::GafsMax => "gafs-max",
            PolicyKind::MinmaxPicsSeq => "minmaxpics-seq",
            PolicyKind::MinmaxPicsGrp => "minmaxpics-grp",
        }
    }

    /// Whether the policy mixes its sampling distribution with uniform exploration.
    pub fn uses_epsilon(self) -> bool {
        matches!(
            self,
            PolicyKind::Areoa | PolicyKind::MinmaxPicsSeq | PolicyKind::MinmaxPicsGrp
        )
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::UnknownPolicy(s.to_string()))
    }
}

/// Visit order over arms for the forced-revisit step of `gafs-max`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ArmOrdering {
    /// Row-major: `(0,0), (0,1), …, (C−1,K−1)`.
    #[default]
    Natural,
    /// Row-major order reversed.
    Reversed,
    /// Explicit permutation of flat arm indices.
    Custom(Vec<usize>),
}

impl ArmOrdering {
    pub fn resolve(&self, arms: usize) -> Result<Vec<usize>> {
        match self {
            ArmOrdering::Natural => Ok((0..arms).collect()),
            ArmOrdering::Reversed => Ok((0..arms).rev().collect()),
            ArmOrdering::Custom(order) => {
                let mut seen = vec![false; arms];
                if order.len() != arms {
                    return Err(invalid(format!("ordering has {} entries for {arms} arms", order.len())));
                }
                for &a in order {
                    if a >= arms || std::mem::replace(&mut seen[a], true) {
                        return Err(invalid("ordering is not a permutation of the arms"));
                    }
                }
                Ok(order.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub epsilon: f64,
    /// Initial pulls per arm.
    pub init_pulls: usize,
    pub ordering: ArmOrdering,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            init_pulls: 5,
            ordering: ArmOrdering::Natural,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(invalid(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        if self.init_pulls == 0 {
            return Err(invalid("initial pulls per arm must be at least 1"));
        }
        Ok(())
    }
}

/// Arms to pull next, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyDecision {
    pub arms: Vec<ArmId>,
}

impl PolicyDecision {
    pub fn single(arm: ArmId) -> Self {
        Self { arms: vec![arm] }
    }
}

/// An adaptive-phase allocation rule. Implementations only see the observable
/// trial state and draw any randomness from `rng`.
pub trait AllocationPolicy {
    fn decide(&mut self, state: &TrialState, rng: &mut dyn RngCore) -> PolicyDecision;
}

/// Round-robin initialization: `B` passes over all arms in row-major order.
pub fn init_phase_sequence(subpopulations: usize, treatments: usize, init_pulls: usize) -> Vec<ArmId> {
    let pass: Vec<ArmId> = (0..subpopulations)
        .flat_map(|i| (0..treatments).map(move |j| ArmId::new(i, j)))
        .collect();
    std::iter::repeat_n(pass, init_pulls).flatten().collect()
}

/// Plug-in variance-optimal fractions `σ̂_ij Σ_j σ̂_ij / Z`; uniform when every estimate is zero.
pub fn areoa_weights(state: &TrialState) -> AllocationWeights {
    let sigma = state.std_estimates();
    let row_sums: Vec<f64> = sigma.iter_rows().map(|r| r.iter().sum()).collect();
    let raw = Grid::from_fn(sigma.rows(), sigma.cols(), |i, j| sigma[(i, j)] * row_sums[i]);
    AllocationWeights::normalized(raw)
}

/// Draws from `(1 − ε)·weights + ε·uniform`.
pub fn epsilon_greedy_sample<R: Rng + ?Sized>(weights: &AllocationWeights, epsilon: f64, rng: &mut R) -> ArmId {
    let uniform = 1.0 / weights.grid().as_slice().len() as f64;
    let mixed: Vec<f64> = weights
        .grid()
        .as_slice()
        .iter()
        .map(|&w| (1.0 - epsilon) * w + epsilon * uniform)
        .collect();
    ArmId::from_flat(sample_index(&mixed, rng), weights.treatments())
}

/// Subpopulation by population share, treatment uniformly.
pub fn aarandom_select<R: Rng + ?Sized>(spec: &DatasetSpec, rng: &mut R) -> ArmId {
    let i = sample_index(spec.probabilities(), rng);
    let j = rng.random_range(0..spec.treatments());
    ArmId::new(i, j)
}

/// Deterministic `gafs-max` choice given the state and a flat-index visit order.
pub fn gafs_max_select(state: &TrialState, ordering: &[usize]) -> ArmId {
    let k = state.treatments();
    let threshold = (state.total_pulls() as f64).sqrt() + 1.0;
    let arms = state.arms().as_slice();
    if let Some(&a) = ordering.iter().find(|&&a| (arms[a].count() as f64) < threshold) {
        return ArmId::from_flat(a, k);
    }
    let mut best = ordering[0];
    let mut best_score = f64::NEG_INFINITY;
    for &a in ordering {
        let score = arms[a].sample_variance() / arms[a].count() as f64;
        if score > best_score {
            best = a;
            best_score = score;
        }
    }
    ArmId::from_flat(best, k)
}

/// Normalized `(Σ_j v_ij)²` per subpopulation. When the squares overflow
/// (floored gaps on large deviations) the mass is split evenly over the rows
/// with a floored gap; an all-zero total falls back to uniform.
fn subpopulation_shares(rows: &[PicsWeightRow]) -> Vec<f64> {
    let squares: Vec<f64> = rows.iter().map(|r| r.total().powi(2)).collect();
    let total: f64 = squares.iter().sum();
    if total.is_finite() && total > 0.0 {
        return squares.iter().map(|s| s / total).collect();
    }
    let floored = rows.iter().filter(|r| r.any_floored()).count();
    if !total.is_finite() && floored > 0 {
        return rows
            .iter()
            .map(|r| if r.any_floored() { 1.0 / floored as f64 } else { 0.0 })
            .collect();
    }
    vec![1.0 / rows.len() as f64; rows.len()]
}

fn estimated_pics_rows(state: &TrialState) -> Vec<PicsWeightRow> {
    pics_weights(&state.mean_estimates(), &state.std_estimates())
}

/// Plug-in surrogate fractions `v̂_ij Σ_j v̂_ij / Z` for the selection-error objective.
pub fn minmaxpics_seq_weights(state: &TrialState) -> AllocationWeights {
    let rows = estimated_pics_rows(state);
    let shares = subpopulation_shares(&rows);
    let k = state.treatments();
    let raw = Grid::from_fn(rows.len(), k, |i, j| {
        let row = &rows[i];
        let total = row.total();
        if total > 0.0 && total.is_finite() {
            shares[i] * row.v[j] / total
        } else {
            shares[i] / k as f64
        }
    });
    AllocationWeights::normalized(raw)
}

/// Picks a subpopulation with probability `(1 − ε)·(Σ_j v̂_ij)²/Z + ε/C` and
/// enrolls one patient per treatment there, truncated to the remaining budget.
pub fn minmaxpics_grp_select<R: Rng + ?Sized>(state: &TrialState, epsilon: f64, rng: &mut R) -> PolicyDecision {
    let rows = estimated_pics_rows(state);
    let c = rows.len() as f64;
    let mixed: Vec<f64> = subpopulation_shares(&rows)
        .into_iter()
        .map(|s| (1.0 - epsilon) * s + epsilon / c)
        .collect();
    let i = sample_index(&mixed, rng);
    let take = state.treatments().min(state.remaining());
    PolicyDecision {
        arms: (0..take).map(|j| ArmId::new(i, j)).collect(),
    }
}

/// One of the five built-in policies, bound to a dataset and configuration.
#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    epsilon: f64,
    spec: DatasetSpec,
    ordering: Vec<usize>,
}

impl Policy {
    pub fn new(kind: PolicyKind, config: &PolicyConfig, spec: &DatasetSpec) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            kind,
            epsilon: config.epsilon,
            spec: spec.clone(),
            ordering: config.ordering.resolve(spec.arm_count())?,
        })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }
}

impl AllocationPolicy for Policy {
    fn decide(&mut self, state: &TrialState, rng: &mut dyn RngCore) -> PolicyDecision {
        match self.kind {
            PolicyKind::Areoa => {
                PolicyDecision::single(epsilon_greedy_sample(&areoa_weights(state), self.epsilon, rng))
            }
            PolicyKind::AaRandom => PolicyDecision::single(aarandom_select(&self.spec, rng)),
            PolicyKind::GafsMax => PolicyDecision::single(gafs_max_select(state, &self.ordering)),
            PolicyKind::MinmaxPicsSeq => {
                PolicyDecision::single(epsilon_greedy_sample(&minmaxpics_seq_weights(state), self.epsilon, rng))
            }
            PolicyKind::MinmaxPicsGrp => minmaxpics_grp_select(state, self.epsilon, rng),
        }
    }
}
