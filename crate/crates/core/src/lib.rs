//! Ecosystem-impact analysis for package dependency networks.
//!
//! A snapshot of package metadata becomes a dependency graph; each package's
//! reach (how many packages transitively depend on it, itself included)
//! weights a per-package maintenance change into an ecosystem-level impact.
//! On top of that sit threshold selection of support sets, a size-matched
//! random baseline, PageRank comparison, and scorecards for arbitrary sets.

pub mod analysis;
pub mod baseline;
pub mod centrality;
pub mod compare;
pub mod ecosystem;
pub mod error;
pub mod graph;
pub mod impact;
pub mod name;
pub mod reach;
pub mod requirement;
pub mod scc;
pub mod selection;
pub mod snapshot;
pub mod stats;
pub mod support;
pub mod synthetic;

pub use analysis::{analyze, Analysis, AnalysisConfig, BaselinePair, Provenance};
pub use baseline::{random_baseline, BaselineResult};
pub use centrality::{pagerank, top_k, PageRankConfig, PageRankScores};
pub use compare::{budget_matched_compare, ComparisonReport, ScenarioPair};
pub use ecosystem::Ecosystem;
pub use error::{Error, ErrorKind, Result};
pub use graph::{DependencyGraph, NodeId};
pub use impact::{ecosystem_state, impact, normalize, normalized_impact, ImpactReport, Scenario};
pub use name::{normalize_name, PackageName};
pub use reach::{reach_counts, ReachTable};
pub use requirement::{parse_requirement, RequirementSpec};
pub use scc::{condense, CondensedDag};
pub use selection::{select_constrained, select_to_threshold, union_selection, SelectionResult};
pub use snapshot::{
    build_snapshot, read_records, BuildOptions, EcosystemSnapshot, FilterStats, OwnerKind, OwnerRef,
    PackageRecord, RawPackageRecord,
};
pub use support::{evaluate_support_set, SetSource, StrategyEvaluation, SupportSet};
