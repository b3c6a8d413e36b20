//! Impact-driven versus PageRank-driven prioritization at equal budget.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::centrality::{top_k, PageRankScores};
use crate::ecosystem::Ecosystem;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::impact::ImpactReport;
use crate::name::PackageName;
use crate::stats::{jaccard, pearson, spearman};
use crate::support::set_share;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPair {
    pub improvement: f64,
    pub regression: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub k: usize,
    pub jaccard: f64,
    pub shared_count: usize,
    pub only_in_impact: Vec<PackageName>,
    pub only_in_pagerank: Vec<PackageName>,
    pub impact_set_share: ScenarioPair,
    pub pagerank_set_share: ScenarioPair,
    /// PageRank score vs normalized share, over scored packages.
    pub spearman: ScenarioPair,
    pub pearson: ScenarioPair,
    pub correlated_packages: usize,
    pub unscored_packages: usize,
}

impl ComparisonReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let pct = |x: f64| format!("{:.2}%", 100.0 * x);
        let _ = writeln!(s, "budget k                 {}", self.k);
        let _ = writeln!(
            s,
            "jaccard                  {} ({} shared, {} impact-only, {} pagerank-only)",
            pct(self.jaccard),
            self.shared_count,
            self.only_in_impact.len(),
            self.only_in_pagerank.len()
        );
        let _ = writeln!(s, "{:<24} {:>12} {:>12}", "", "improvement", "regression");
        for (label, pair, as_pct) in [
            ("impact set share", self.impact_set_share, true),
            ("pagerank set share", self.pagerank_set_share, true),
            ("spearman r_s", self.spearman, false),
            ("pearson r_p", self.pearson, false),
        ] {
            let fmt = |x: f64| if as_pct { pct(x) } else { format!("{x:.4}") };
            let _ = writeln!(s, "{label:<24} {:>12} {:>12}", fmt(pair.improvement), fmt(pair.regression));
        }
        let _ = writeln!(
            s,
            "correlations over {} scored packages ({} unscored left out)",
            self.correlated_packages, self.unscored_packages
        );
        s
    }
}

/// Compares `impact_set` with the PageRank top-k of the same size.
pub fn budget_matched_compare(
    eco: &Ecosystem,
    improvement: &ImpactReport,
    regression: &ImpactReport,
    pagerank: &PageRankScores,
    impact_set: &[NodeId],
) -> Result<ComparisonReport> {
    let k = impact_set.len();
    let impact_ids: BTreeSet<NodeId> = impact_set.iter().copied().collect();
    if impact_ids.len() != k {
        return Err(Error::domain("impact set contains duplicates"));
    }
    let pr_ids: BTreeSet<NodeId> = top_k(&pagerank.scores, k)?.into_iter().collect();
    let names = |ids: Vec<&NodeId>| ids.into_iter().map(|&i| eco.graph().name(i).clone()).collect();

    let scored = eco.scored_ids();
    let pr_scores: Vec<f64> = scored.iter().map(|&i| pagerank.score(i)).collect();
    let correlate = |report: &ImpactReport, f: fn(&[f64], &[f64]) -> Result<f64>| -> Result<f64> {
        let shares = report
            .shares()
            .ok_or_else(|| Error::Invariant(format!("report {:?} is not normalized", report.label())))?;
        let y: Vec<f64> = scored.iter().map(|&i| shares[i as usize]).collect();
        f(&pr_scores, &y)
    };
    let impact_vec: Vec<NodeId> = impact_ids.iter().copied().collect();
    let pr_vec: Vec<NodeId> = pr_ids.iter().copied().collect();

    Ok(ComparisonReport {
        k,
        jaccard: jaccard(&impact_ids, &pr_ids),
        shared_count: impact_ids.intersection(&pr_ids).count(),
        only_in_impact: names(impact_ids.difference(&pr_ids).collect()),
        only_in_pagerank: names(pr_ids.difference(&impact_ids).collect()),
        impact_set_share: ScenarioPair {
            improvement: set_share(improvement, &impact_vec)?,
            regression: set_share(regression, &impact_vec)?,
        },
        pagerank_set_share: ScenarioPair {
            improvement: set_share(improvement, &pr_vec)?,
            regression: set_share(regression, &pr_vec)?,
        },
        spearman: ScenarioPair {
            improvement: correlate(improvement, spearman)?,
            regression: correlate(regression, spearman)?,
        },
        pearson: ScenarioPair {
            improvement: correlate(improvement, pearson)?,
            regression: correlate(regression, pearson)?,
        },
        correlated_packages: scored.len(),
        unscored_packages: eco.len() - scored.len(),
    })
}
