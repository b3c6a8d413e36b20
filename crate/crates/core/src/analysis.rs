//! End-to-end analysis: both preset scenarios, threshold selections, their
//! union, PageRank, and the Monte Carlo baselines.

use serde::{Deserialize, Serialize};

use crate::baseline::{random_baseline, BaselineResult, DEFAULT_SEED, DEFAULT_TRIALS};
use crate::centrality::{pagerank, PageRankConfig, PageRankScores};
use crate::compare::{budget_matched_compare, ComparisonReport};
use crate::ecosystem::Ecosystem;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::impact::{normalized_impact, ImpactReport, Scenario};
use crate::selection::{select_to_threshold, union_selection, SelectionResult};
use crate::support::{evaluate_support_set, SetSource, StrategyEvaluation, SupportSet};

pub const DEFAULT_TAU: f64 = 0.8;
pub const IMPACT_DRIVEN_LABEL: &str = "impact-driven";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub tau: f64,
    pub damping: f64,
    pub pagerank_tol: f64,
    pub pagerank_max_iter: usize,
    pub n_trials: usize,
    pub seed: u64,
    /// Overrides the comparable-reach threshold of the exclusion analysis.
    pub reach_threshold: Option<u64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let pr = PageRankConfig::default();
        AnalysisConfig {
            tau: DEFAULT_TAU,
            damping: pr.damping,
            pagerank_tol: pr.tol,
            pagerank_max_iter: pr.max_iter,
            n_trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            reach_threshold: None,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::domain(format!("tau {} outside (0, 1]", self.tau)));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::domain(format!("damping {} outside (0, 1)", self.damping)));
        }
        if self.n_trials == 0 {
            return Err(Error::domain("n_trials must be at least 1"));
        }
        Ok(())
    }

    pub fn pagerank(&self) -> PageRankConfig {
        PageRankConfig {
            damping: self.damping,
            tol: self.pagerank_tol,
            max_iter: self.pagerank_max_iter,
        }
    }
}

/// Everything derived from one ecosystem and config, except the baselines.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub config: AnalysisConfig,
    pub improvement: ImpactReport,
    pub regression: ImpactReport,
    pub improvement_selection: SelectionResult,
    pub regression_selection: SelectionResult,
    /// Union of both selections, ascending ids.
    pub union: Vec<NodeId>,
    pub pagerank: PageRankScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselinePair {
    pub improvement: BaselineResult,
    pub regression: BaselineResult,
}

pub fn analyze(eco: &Ecosystem, config: &AnalysisConfig) -> Result<Analysis> {
    config.validate()?;
    let improvement = normalized_impact(eco, &Scenario::improvement(eco))?;
    let regression = normalized_impact(eco, &Scenario::regression(eco))?;
    let improvement_selection = select_to_threshold(eco, &improvement, config.tau)?;
    let regression_selection = select_to_threshold(eco, &regression, config.tau)?;
    let union = union_selection(&improvement_selection, &regression_selection);
    let pagerank = pagerank(eco.graph(), config.pagerank())?;
    Ok(Analysis {
        config: config.clone(),
        improvement,
        regression,
        improvement_selection,
        regression_selection,
        union,
        pagerank,
    })
}

impl Analysis {
    /// The union selection tested against random sets of equal size, once
    /// per scenario with the same seed.
    pub fn baselines(&self, eco: &Ecosystem) -> Result<BaselinePair> {
        let (n, seed) = (self.config.n_trials, self.config.seed);
        Ok(BaselinePair {
            improvement: random_baseline(eco, &self.improvement, &self.union, n, seed)?,
            regression: random_baseline(eco, &self.regression, &self.union, n, seed)?,
        })
    }

    pub fn impact_set(&self, eco: &Ecosystem) -> SupportSet {
        SupportSet::from_ids(IMPACT_DRIVEN_LABEL, &self.union, SetSource::ImpactSelection, eco)
    }

    pub fn evaluate(&self, set: &SupportSet, eco: &Ecosystem) -> Result<StrategyEvaluation> {
        evaluate_support_set(set, eco, &self.improvement, &self.regression, self.config.reach_threshold)
    }

    /// The impact-driven row followed by one row per external set.
    pub fn strategies(&self, eco: &Ecosystem, external: &[SupportSet]) -> Result<Vec<StrategyEvaluation>> {
        let mut rows = vec![self.evaluate(&self.impact_set(eco), eco)?];
        for set in external {
            rows.push(self.evaluate(set, eco)?);
        }
        Ok(rows)
    }

    pub fn comparison(&self, eco: &Ecosystem) -> Result<ComparisonReport> {
        budget_matched_compare(eco, &self.improvement, &self.regression, &self.pagerank, &self.union)
    }
}

/// Header attached to JSON outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub snapshot_sha256: String,
    pub config: AnalysisConfig,
}

impl Provenance {
    pub fn new(eco: &Ecosystem, config: &AnalysisConfig) -> Result<Self> {
        Ok(Provenance {
            tool: "ecoimpact".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            snapshot_sha256: eco.snapshot().content_hash()?,
            config: config.clone(),
        })
    }
}
