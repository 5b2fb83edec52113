//! Budgeted minimax bandit allocation for subpopulation-stratified trials.
//!
//! A trial has `C` subpopulations and `K` treatments; every
//! `(subpopulation, treatment)` pair is an arm and each pull enrolls one
//! patient. Given a total budget of `N` pulls, the goal is an allocation that
//! keeps the worst subpopulation's loss small, either the variance of its
//! estimated treatment effect or its probability of selecting a suboptimal
//! treatment.
//!
//! The crate provides the closed-form oracle allocations and loss evaluators
//! ([`oracle`]), five online policies ([`policy`]), a seeded replication
//! simulator ([`simulate`]), the built-in datasets ([`datasets`]) and a CSV
//! experiment runner ([`experiment`]).

pub mod datasets;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod normal;
pub mod oracle;
pub mod policy;
pub mod quadrature;
pub mod simulate;
pub mod trial;

pub use datasets::{builtin_dataset, builtin_datasets, BUILTIN_NAMES};
pub use error::{Error, Result};
pub use experiment::{run_experiment, run_experiment_to_path, ExperimentPlan, PolicyEntry};
pub use grid::Grid;
pub use normal::normal_cdf;
pub use oracle::{
    exact_pics_loss, pics_surrogate_allocation, pics_weight_row, variance_oracle_allocation, variance_oracle_loss,
    worst_case_pics_loss, worst_case_variance_loss, PicsWeightRow,
};
pub use policy::{AllocationPolicy, ArmOrdering, Policy, PolicyConfig, PolicyDecision, PolicyKind};
pub use simulate::{
    replicate, replicate_with, run_trial, Execution, LossPoint, LossTrajectory, Objective, ReplicationSet, RunConfig,
};
pub use trial::{AllocationWeights, ArmId, ArmStats, DatasetSpec, TrialState};
