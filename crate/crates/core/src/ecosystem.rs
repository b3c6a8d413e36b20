use crate::graph::{DependencyGraph, NodeId};
use crate::reach::{reach_counts_with, ReachOptions, ReachTable};
use crate::scc::condense;
use crate::snapshot::EcosystemSnapshot;

/// A snapshot together with its graph, reach table and per-node scores.
///
/// Immutable once built; every analysis borrows it.
#[derive(Debug, Clone)]
pub struct Ecosystem {
    snapshot: EcosystemSnapshot,
    graph: DependencyGraph,
    reach: ReachTable,
    scores: Vec<Option<f64>>,
}

impl Ecosystem {
    pub fn new(snapshot: EcosystemSnapshot) -> Self {
        Self::with_reach_options(snapshot, ReachOptions::default())
    }

    pub fn with_reach_options(snapshot: EcosystemSnapshot, options: ReachOptions) -> Self {
        let graph = DependencyGraph::from_snapshot(&snapshot);
        let reach = reach_counts_with(&graph, &condense(&graph), options);
        let scores = snapshot
            .packages()
            .values()
            .map(|r| r.maintained_score)
            .collect();
        Ecosystem {
            snapshot,
            graph,
            reach,
            scores,
        }
    }

    pub fn snapshot(&self) -> &EcosystemSnapshot {
        &self.snapshot
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    pub fn reach(&self) -> &ReachTable {
        &self.reach
    }

    pub fn scores(&self) -> &[Option<f64>] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.graph.node_count()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    /// Ids of packages carrying a maintained score, ascending.
    pub fn scored_ids(&self) -> Vec<NodeId> {
        (0..self.len() as NodeId)
            .filter(|&i| self.scores[i as usize].is_some())
            .collect()
    }

    pub fn record(&self, id: NodeId) -> &crate::snapshot::PackageRecord {
        &self.snapshot.packages()[self.graph.name(id)]
    }
}
