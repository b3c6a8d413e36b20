//! Size-matched Monte Carlo baseline for a selected package set.
//!
//! Each trial draws `k` distinct scored packages uniformly without
//! replacement and sums their normalized shares under the same scenario as
//! the observed set. Trial `t` uses a ChaCha8 generator seeded with `seed`
//! on stream `t`, and draws with Floyd's combination algorithm, so results
//! depend only on `(seed, inputs)` and not on thread scheduling.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ecosystem::Ecosystem;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::impact::ImpactReport;
use crate::stats::{compensated_sum, mean, std_dev};

pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub scenario: String,
    pub n_trials: usize,
    pub seed: u64,
    pub set_size: usize,
    pub population: usize,
    /// Cumulative share of the observed set.
    pub observed_impact: f64,
    pub trial_impacts: TrialSummary,
    /// `(observed - mean) / std`, or 0 when `std_is_zero`.
    pub z_score: f64,
    pub std_is_zero: bool,
    /// Trials whose impact reached or exceeded the observed one.
    pub exceed_count: usize,
    /// `exceed_count / n_trials`, or `1 / n_trials` when no trial reached it.
    pub p_upper_bound: f64,
    /// Human form of the p-value: `"< 0.0001"` when no trial reached it.
    pub p_value: String,
}

/// Sum of shares over `ids`, taken in ascending id order.
fn set_share(shares: &[f64], ids: &mut [NodeId]) -> f64 {
    ids.sort_unstable();
    compensated_sum(ids.iter().map(|&i| shares[i as usize]))
}

/// `k` distinct indices in `0..n` (Floyd).
fn draw_indices(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut chosen = HashSet::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    for j in n - k..n {
        let t = rng.random_range(0..=j);
        let pick = if chosen.contains(&t) { j } else { t };
        chosen.insert(pick);
        out.push(pick);
    }
    out
}

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Compares the observed set against `n_trials` random sets of equal size
/// drawn from the scored packages.
pub fn random_baseline(
    eco: &Ecosystem,
    report: &ImpactReport,
    observed: &[NodeId],
    n_trials: usize,
    seed: u64,
) -> Result<BaselineResult> {
    let shares = report
        .shares()
        .ok_or_else(|| Error::Invariant(format!("report {:?} is not normalized", report.label())))?;
    if n_trials == 0 {
        return Err(Error::domain("n_trials must be at least 1"));
    }
    let population = eco.scored_ids();
    let k = observed.len();
    if k > population.len() {
        return Err(Error::domain(format!(
            "set size {k} exceeds the {} scored packages",
            population.len()
        )));
    }

    let observed_impact = set_share(shares, &mut observed.to_vec());
    let trials: Vec<f64> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let mut ids: Vec<NodeId> = draw_indices(&mut rng, population.len(), k)
                .into_iter()
                .map(|i| population[i])
                .collect();
            set_share(shares, &mut ids)
        })
        .collect();

    let min = trials.iter().copied().fold(f64::INFINITY, f64::min);
    let max = trials.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mean, std) = if min == max {
        (min, 0.0)
    } else {
        let m = mean(&trials);
        (m, std_dev(&trials, m))
    };
    let std_is_zero = std == 0.0;
    let z_score = if std_is_zero { 0.0 } else { (observed_impact - mean) / std };
    let exceed_count = trials.iter().filter(|&&t| t >= observed_impact).count();
    let (p_upper_bound, p_value) = if exceed_count == 0 {
        let bound = 1.0 / n_trials as f64;
        (bound, format!("< {bound}"))
    } else {
        let p = exceed_count as f64 / n_trials as f64;
        (p, p.to_string())
    };

    Ok(BaselineResult {
        scenario: report.label().to_string(),
        n_trials,
        seed,
        set_size: k,
        population: population.len(),
        observed_impact,
        trial_impacts: TrialSummary { mean, std, min, max },
        z_score,
        std_is_zero,
        exceed_count,
        p_upper_bound,
        p_value,
    })
}
