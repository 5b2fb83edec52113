//! Trial world description, per-arm running statistics and the observable
//! trial state that allocation policies act on.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

const PROB_TOL: f64 = 1e-9;

/// Ground-truth description of a stratified trial: subpopulation mix plus the
/// mean and variance of the (normal) response for every treatment.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    name: String,
    p: Vec<f64>,
    mu: Grid<f64>,
    sigma2: Grid<f64>,
}

impl DatasetSpec {
    pub fn new(name: impl Into<String>, p: Vec<f64>, mu: Vec<Vec<f64>>, sigma2: Vec<Vec<f64>>) -> Result<Self> {
        let name = name.into();
        let mu = Grid::from_rows(mu).ok_or_else(|| invalid(format!("{name}: ragged or empty means")))?;
        let sigma2 = Grid::from_rows(sigma2).ok_or_else(|| invalid(format!("{name}: ragged or empty variances")))?;
        if mu.rows() != sigma2.rows() || mu.cols() != sigma2.cols() {
            return Err(invalid(format!("{name}: means and variances differ in shape")));
        }
        if mu.cols() < 2 {
            return Err(invalid(format!("{name}: need at least two treatments")));
        }
        if p.len() != mu.rows() {
            return Err(invalid(format!(
                "{name}: {} subpopulation probabilities for {} subpopulations",
                p.len(),
                mu.rows()
            )));
        }
        if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(invalid(format!("{name}: negative subpopulation probability")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(invalid(format!("{name}: subpopulation probabilities sum to {total}")));
        }
        if sigma2.as_slice().iter().any(|&v| !v.is_finite() || v <= 0.0) {
            return Err(invalid(format!("{name}: response variances must be positive")));
        }
        if mu.as_slice().iter().any(|m| !m.is_finite()) {
            return Err(invalid(format!("{name}: non-finite mean response")));
        }
        Ok(Self { name, p, mu, sigma2 })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of subpopulations.
    pub fn subpopulations(&self) -> usize {
        self.mu.rows()
    }

    /// Number of treatments.
    pub fn treatments(&self) -> usize {
        self.mu.cols()
    }

    pub fn arm_count(&self) -> usize {
        self.subpopulations() * self.treatments()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn means(&self) -> &Grid<f64> {
        &self.mu
    }

    pub fn variances(&self) -> &Grid<f64> {
        &self.sigma2
    }

    pub fn std_devs(&self) -> Grid<f64> {
        self.sigma2.map(|v| v.sqrt())
    }

    /// True best treatment per subpopulation.
    pub fn best_treatments(&self) -> Vec<usize> {
        self.mu.iter_rows().map(argmax_lowest).collect()
    }
}

/// A `(subpopulation, treatment)` pair, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArmId {
    pub i: usize,
    pub j: usize,
}

impl ArmId {
    pub const fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }

    /// Row-major position among `treatments` arms per subpopulation.
    pub fn flat(self, treatments: usize) -> usize {
        self.i * treatments + self.j
    }

    pub fn from_flat(index: usize, treatments: usize) -> Self {
        Self::new(index / treatments, index % treatments)
    }
}

/// Welford accumulator for one arm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArmStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl ArmStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Unbiased sample variance; 0 with fewer than two observations.
    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn sample_std(&self) -> f64 {
        self.sample_variance().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmSummary {
    pub count: u64,
    pub mean: f64,
    pub std: f64,
}

/// Everything a policy may observe: per-arm statistics and budget bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialState {
    arms: Grid<ArmStats>,
    total_pulls: usize,
    budget: usize,
}

impl TrialState {
    pub fn new(subpopulations: usize, treatments: usize, budget: usize) -> Result<Self> {
        if budget == 0 {
            return Err(invalid("budget must be at least 1"));
        }
        if subpopulations == 0 || treatments == 0 {
            return Err(invalid("trial needs at least one arm"));
        }
        Ok(Self {
            arms: Grid::filled(subpopulations, treatments, ArmStats::default()),
            total_pulls: 0,
            budget,
        })
    }

    pub fn for_spec(spec: &DatasetSpec, budget: usize) -> Result<Self> {
        Self::new(spec.subpopulations(), spec.treatments(), budget)
    }

    pub fn subpopulations(&self) -> usize {
        self.arms.rows()
    }

    pub fn treatments(&self) -> usize {
        self.arms.cols()
    }

    pub fn total_pulls(&self) -> usize {
        self.total_pulls
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.total_pulls
    }

    pub fn arms(&self) -> &Grid<ArmStats> {
        &self.arms
    }

    pub fn arm(&self, arm: ArmId) -> &ArmStats {
        &self.arms[(arm.i, arm.j)]
    }

    pub fn record(&mut self, arm: ArmId, response: f64) -> Result<()> {
        if self.total_pulls >= self.budget {
            return Err(Error::BudgetExhausted { budget: self.budget });
        }
        if arm.i >= self.subpopulations() || arm.j >= self.treatments() {
            return Err(invalid(format!("arm ({}, {}) outside the trial grid", arm.i, arm.j)));
        }
        self.arms[(arm.i, arm.j)].push(response);
        self.total_pulls += 1;
        Ok(())
    }

    pub fn summary(&self, arm: ArmId) -> ArmSummary {
        let s = self.arm(arm);
        ArmSummary {
            count: s.count(),
            mean: s.mean(),
            std: s.sample_std(),
        }
    }

    pub fn mean_estimates(&self) -> Grid<f64> {
        self.arms.map(ArmStats::mean)
    }

    pub fn std_estimates(&self) -> Grid<f64> {
        self.arms.map(ArmStats::sample_std)
    }

    pub fn counts(&self) -> Grid<u64> {
        self.arms.map(ArmStats::count)
    }

    /// Estimated best treatment per subpopulation (lowest index on ties).
    pub fn recommend_itr(&self) -> Vec<usize> {
        self.mean_estimates().iter_rows().map(argmax_lowest).collect()
    }
}

/// Index of the largest entry, preferring the lowest index among ties.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = j;
        }
    }
    best
}

/// Nonnegative weights over all arms summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationWeights {
    w: Grid<f64>,
}

impl AllocationWeights {
    pub fn uniform(subpopulations: usize, treatments: usize) -> Self {
        let n = (subpopulations * treatments) as f64;
        Self {
            w: Grid::filled(subpopulations, treatments, 1.0 / n),
        }
    }

    pub fn new(w: Grid<f64>) -> Result<Self> {
        if w.as_slice().iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(invalid("allocation weights must be finite and nonnegative"));
        }
        let total: f64 = w.as_slice().iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(invalid(format!("allocation weights sum to {total}")));
        }
        Ok(Self { w })
    }

    /// Normalizes `raw`; falls back to uniform when the total is zero or not finite.
    pub fn normalized(raw: Grid<f64>) -> Self {
        let total: f64 = raw.as_slice().iter().sum();
        let valid = raw.as_slice().iter().all(|&x| x >= 0.0 && x.is_finite());
        if !valid || !total.is_finite() || total <= 0.0 {
            return Self::uniform(raw.rows(), raw.cols());
        }
        Self {
            w: raw.map(|&x| x / total),
        }
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.w
    }

    pub fn get(&self, arm: ArmId) -> f64 {
        self.w[(arm.i, arm.j)]
    }

    pub fn subpopulations(&self) -> usize {
        self.w.rows()
    }

    pub fn treatments(&self) -> usize {
        self.w.cols()
    }

    /// Total weight of each subpopulation.
    pub fn row_sums(&self) -> Vec<f64> {
        self.w.iter_rows().map(|r| r.iter().sum()).collect()
    }

    /// Draws one arm by inverse-CDF over the row-major weights.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ArmId {
        let flat = sample_index(self.w.as_slice(), rng);
        ArmId::from_flat(flat, self.w.cols())
    }
}

/// Inverse-CDF draw from nonnegative weights that sum to (about) one.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = k;
            acc += w;
            if u < acc {
                return k;
            }
        }
    }
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds1() -> DatasetSpec {
        DatasetSpec::new(
            "DS1",
            vec![0.25; 4],
            vec![vec![1.0, 4.0], vec![2.0, 2.0], vec![4.0, 1.0], vec![2.0, 2.0]],
            vec![
                vec![1000.0, 1000.0],
                vec![100.0, 100.0],
                vec![100.0, 100.0],
                vec![100.0, 100.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn fresh_state_is_zeroed() {
        let state = TrialState::for_spec(&ds1(), 200).unwrap();
        assert_eq!((state.subpopulations(), state.treatments()), (4, 2));
        assert_eq!(state.budget(), 200);
        assert_eq!(state.total_pulls(), 0);
        assert!(state.arms().as_slice().iter().all(|a| *a == ArmStats::default()));
    }

    #[test]
    fn zero_budget_rejected() {
        assert!(matches!(
            TrialState::for_spec(&ds1(), 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn two_point_mean_and_variance() {
        let mut state = TrialState::new(1, 2, 10).unwrap();
        let arm = ArmId::new(0, 1);
        state.record(arm, 3.0).unwrap();
        state.record(arm, 5.0).unwrap();
        let s = state.arm(arm);
        assert_eq!(s.count(), 2);
        assert_eq!(s.mean(), 4.0);
        assert_eq!(s.sample_variance(), 2.0);
    }

    #[test]
    fn single_and_constant_observations() {
        let mut a = ArmStats::default();
        a.push(-7.25);
        assert_eq!((a.count(), a.mean(), a.m2()), (1, -7.25, 0.0));

        let mut b = ArmStats::default();
        for _ in 0..10 {
            b.push(3.3);
        }
        assert!((b.mean() - 3.3).abs() < 1e-15);
        assert!(b.sample_variance().abs() < 1e-24);
    }

    #[test]
    fn summary_conventions() {
        let mut state = TrialState::new(2, 2, 100).unwrap();
        for x in 1..=5 {
            state.record(ArmId::new(0, 0), x as f64).unwrap();
        }
        state.record(ArmId::new(1, 1), 10.0).unwrap();
        state.record(ArmId::new(1, 1), 10.0).unwrap();

        let s = state.summary(ArmId::new(0, 0));
        assert_eq!(s.count, 5);
        assert!((s.mean - 3.0).abs() < 1e-15);
        assert!((s.std - 2.5f64.sqrt()).abs() < 1e-15);
        assert!((s.std - 1.5811).abs() < 1e-4);

        let empty = state.summary(ArmId::new(0, 1));
        assert_eq!((empty.count, empty.mean, empty.std), (0, 0.0, 0.0));

        let pair = state.summary(ArmId::new(1, 1));
        assert_eq!((pair.count, pair.mean, pair.std), (2, 10.0, 0.0));
    }

    #[test]
    fn budget_exhaustion() {
        let mut state = TrialState::new(1, 2, 2).unwrap();
        state.record(ArmId::new(0, 0), 1.0).unwrap();
        state.record(ArmId::new(0, 1), 1.0).unwrap();
        let err = state.record(ArmId::new(0, 0), 1.0).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { budget: 2 }));
        assert_eq!(state.total_pulls(), 2);
    }

    fn state_with_means(rows: &[&[f64]]) -> TrialState {
        let k = rows[0].len();
        let mut state = TrialState::new(rows.len(), k, 1000).unwrap();
        for (i, row) in rows.iter().enumerate() {
            for (j, &m) in row.iter().enumerate() {
                state.record(ArmId::new(i, j), m).unwrap();
            }
        }
        state
    }

    #[test]
    fn itr_argmax_with_low_index_ties() {
        assert_eq!(state_with_means(&[&[5.0, 3.0]]).recommend_itr(), vec![0]);
        assert_eq!(state_with_means(&[&[3.0, 3.0]]).recommend_itr(), vec![0]);
        assert_eq!(
            state_with_means(&[&[1.0, 9.0, 2.0], &[4.0, 4.0, 7.0]]).recommend_itr(),
            vec![1, 2]
        );
    }

    #[test]
    fn dataset_validation() {
        let bad_p = DatasetSpec::new("x", vec![0.5, 0.4], vec![vec![0.0, 1.0]; 2], vec![vec![1.0, 1.0]; 2]);
        assert!(bad_p.is_err());
        let bad_var = DatasetSpec::new("x", vec![1.0], vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]);
        assert!(bad_var.is_err());
        let one_arm = DatasetSpec::new("x", vec![1.0], vec![vec![0.0]], vec![vec![1.0]]);
        assert!(one_arm.is_err());
        let shape = DatasetSpec::new("x", vec![1.0], vec![vec![0.0, 1.0]], vec![vec![1.0, 1.0, 1.0]]);
        assert!(shape.is_err());
    }

    #[test]
    fn weights_validation_and_fallback() {
        assert!(AllocationWeights::new(Grid::filled(2, 2, 0.3)).is_err());
        assert!(AllocationWeights::new(Grid::filled(2, 2, 0.25)).is_ok());
        let w = AllocationWeights::normalized(Grid::filled(2, 3, 0.0));
        assert_eq!(w, AllocationWeights::uniform(2, 3));
    }
}
