//! Oracle allocations and loss evaluation with known response parameters.
//!
//! Both objectives reduce to the same minimax problem: choose real-valued
//! counts `n_ij` summing to `N` that minimize `max_i Σ_j s_ij² / n_ij` for a
//! per-arm scale `s_ij`. For the variance objective the scale is the response
//! standard deviation; for the selection-error surrogate it is the
//! gap-scaled weight produced by [`pics_weight_row`]. The optimum is
//!
//! ```text
//! n_ij = s_ij · R_i / Σ_k R_k² · N,   R_i = Σ_j s_ij
//! ```
//!
//! and it equalizes `Σ_j s_ij² / n_ij = Σ_k R_k² / N` across every row.

use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::normal::{normal_pdf, normal_sf};
use crate::quadrature;
use crate::trial::{argmax_lowest, DatasetSpec};

/// Lower bound applied to `|μ_best − μ_j|` before it is used as a divisor.
pub const GAP_FLOOR: f64 = 1e-12;

// Standard normal mass outside [-9, 9] is below 3e-19.
const Z_LIMIT: f64 = 9.0;
const QUAD_TOL: f64 = 1e-14;

/// Closed-form minimax allocation for an arbitrary positive scale matrix.
pub fn minimax_allocation(scale: &Grid<f64>, budget: f64) -> Grid<f64> {
    let row_sums: Vec<f64> = scale.iter_rows().map(|r| r.iter().sum()).collect();
    let z: f64 = row_sums.iter().map(|r| r * r).sum();
    Grid::from_fn(scale.rows(), scale.cols(), |i, j| {
        scale[(i, j)] * row_sums[i] / z * budget
    })
}

/// `max_i Σ_j s_ij² / n_ij`, the objective the closed form minimizes.
pub fn minimax_objective(scale: &Grid<f64>, counts: &Grid<f64>) -> f64 {
    scale
        .iter_rows()
        .zip(counts.iter_rows())
        .map(|(s, n)| s.iter().zip(n).map(|(s, n)| s * s / n).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn check_budget(budget: usize) -> Result<f64> {
    if budget == 0 {
        return Err(invalid("budget must be at least 1"));
    }
    Ok(budget as f64)
}

/// Variance-optimal oracle counts (real valued, summing to `budget`).
pub fn variance_oracle_allocation(spec: &DatasetSpec, budget: usize) -> Result<Grid<f64>> {
    let n = check_budget(budget)?;
    Ok(minimax_allocation(&spec.std_devs(), n))
}

/// Optimal worst-case variance loss `Σ_i (Σ_j σ_ij)² / N`.
pub fn variance_oracle_loss(spec: &DatasetSpec, budget: usize) -> Result<f64> {
    let n = check_budget(budget)?;
    let z: f64 = spec.std_devs().iter_rows().map(|r| r.iter().sum::<f64>().powi(2)).sum();
    Ok(z / n)
}

/// Gap-scaled weights of one subpopulation for the selection-error surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct PicsWeightRow {
    pub v: Vec<f64>,
    pub j_star: usize,
    /// Treatments whose gap to the leader hit [`GAP_FLOOR`].
    pub floored: Vec<bool>,
}

impl PicsWeightRow {
    pub fn total(&self) -> f64 {
        self.v.iter().sum()
    }

    pub fn any_floored(&self) -> bool {
        self.floored.iter().any(|&f| f)
    }
}

/// `v_j = σ_j / gap_j` for challengers and `v_* = σ_* · sqrt(Σ_j 1/gap_j²)`
/// for the leader, with `gap_j = μ_* − μ_j` floored at [`GAP_FLOOR`].
pub fn pics_weight_row(mu_row: &[f64], sigma_row: &[f64]) -> PicsWeightRow {
    let j_star = argmax_lowest(mu_row);
    let mut v = vec![0.0; mu_row.len()];
    let mut floored = vec![false; mu_row.len()];
    let mut inv_gap2 = 0.0;
    for (j, (&m, &s)) in mu_row.iter().zip(sigma_row).enumerate() {
        if j == j_star {
            continue;
        }
        let raw = mu_row[j_star] - m;
        let gap = if raw < GAP_FLOOR {
            floored[j] = true;
            GAP_FLOOR
        } else {
            raw
        };
        v[j] = s / gap;
        inv_gap2 += 1.0 / (gap * gap);
    }
    v[j_star] = sigma_row[j_star] * inv_gap2.sqrt();
    PicsWeightRow { v, j_star, floored }
}

/// Weight rows of every subpopulation, from the given means and standard deviations.
pub fn pics_weights(mu: &Grid<f64>, sigma: &Grid<f64>) -> Vec<PicsWeightRow> {
    mu.iter_rows()
        .zip(sigma.iter_rows())
        .map(|(m, s)| pics_weight_row(m, s))
        .collect()
}

pub(crate) fn rows_to_grid(rows: &[PicsWeightRow]) -> Grid<f64> {
    Grid::from_fn(rows.len(), rows[0].v.len(), |i, j| rows[i].v[j])
}

/// Surrogate-optimal oracle counts for the selection-error objective.
pub fn pics_surrogate_allocation(spec: &DatasetSpec, budget: usize) -> Result<Grid<f64>> {
    let n = check_budget(budget)?;
    let rows = pics_weights(spec.means(), &spec.std_devs());
    Ok(minimax_allocation(&rows_to_grid(&rows), n))
}

/// Boole + Chebyshev upper bound on one row's selection error:
/// `Σ_{j≠*} (σ_j²/n_j + σ_*²/n_*) / (μ_* − μ_j)²`.
pub fn pics_chebyshev_bound(mu_row: &[f64], sigma_row: &[f64], n_row: &[f64]) -> f64 {
    let best = argmax_lowest(mu_row);
    let var_best = sigma_row[best].powi(2) / n_row[best];
    (0..mu_row.len())
        .filter(|&j| j != best)
        .map(|j| (sigma_row[j].powi(2) / n_row[j] + var_best) / (mu_row[best] - mu_row[j]).powi(2))
        .sum()
}

/// Probability that some inferior treatment's sample mean reaches the true
/// best treatment's sample mean, for normal responses with standard
/// deviations `sigma_row` and (possibly fractional) sample sizes `n_row`.
///
/// Conditions on the leader's standardized sample mean `z` and integrates
/// `φ(z) · (1 − Π_j Φ((s_* z + μ_* − μ_j) / s_j))` numerically, where
/// `s = σ/√n`. Panels are split where each factor crosses one half.
pub fn exact_pics_loss(mu_row: &[f64], sigma_row: &[f64], n_row: &[f64]) -> f64 {
    let best = argmax_lowest(mu_row);
    let s_best = sigma_row[best] / n_row[best].sqrt();
    let challengers: Vec<(f64, f64)> = (0..mu_row.len())
        .filter(|&j| j != best)
        .map(|j| (mu_row[best] - mu_row[j], sigma_row[j] / n_row[j].sqrt()))
        .collect();
    if challengers.is_empty() {
        return 0.0;
    }
    let breaks: Vec<f64> = challengers.iter().map(|&(gap, _)| -gap / s_best).collect();

    let integrand = |z: f64| {
        // 1 - Π(1 - Q_j) evaluated as -expm1(Σ ln(1 - Q_j)) so tiny losses keep their digits
        let log_all_below: f64 = challengers
            .iter()
            .map(|&(gap, s)| (-normal_sf((s_best * z + gap) / s)).ln_1p())
            .sum();
        normal_pdf(z) * -log_all_below.exp_m1()
    };
    quadrature::integrate(integrand, -Z_LIMIT, Z_LIMIT, &breaks, QUAD_TOL).clamp(0.0, 1.0)
}

fn has_nonpositive(counts: &Grid<f64>) -> bool {
    counts.as_slice().iter().any(|&n| n.is_nan() || n <= 0.0)
}

/// `max_i Σ_j σ²_ij / n_ij` with the true variances; infinite when any count is zero.
pub fn worst_case_variance_loss(spec: &DatasetSpec, counts: &Grid<f64>) -> f64 {
    if has_nonpositive(counts) {
        return f64::INFINITY;
    }
    spec.variances()
        .iter_rows()
        .zip(counts.iter_rows())
        .map(|(v, n)| v.iter().zip(n).map(|(v, n)| v / n).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest per-subpopulation selection error at the given counts, using the
/// true means and variances; infinite when any count is zero.
pub fn worst_case_pics_loss(spec: &DatasetSpec, counts: &Grid<f64>) -> f64 {
    if has_nonpositive(counts) {
        return f64::INFINITY;
    }
    let sigma = spec.std_devs();
    (0..spec.subpopulations())
        .map(|i| exact_pics_loss(spec.means().row(i), sigma.row(i), counts.row(i)))
        .fold(0.0, f64::max)
}
