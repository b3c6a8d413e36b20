//! Directed dependency graph over dense node ids.
//!
//! Edges point from a dependent to its dependency. Node ids follow the
//! lexicographic order of package names, which is also the snapshot order.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::name::PackageName;
use crate::snapshot::EcosystemSnapshot;

pub type NodeId = u32;

/// Compressed adjacency lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
}

impl Adjacency {
    /// Builds from `(from, to)` pairs; neighbour lists come out sorted.
    pub fn from_pairs(node_count: usize, pairs: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        let mut pairs: Vec<(NodeId, NodeId)> = pairs.into_iter().collect();
        pairs.sort_unstable();
        let mut offsets = vec![0usize; node_count + 1];
        for &(from, _) in &pairs {
            offsets[from as usize + 1] += 1;
        }
        for i in 0..node_count {
            offsets[i + 1] += offsets[i];
        }
        Adjacency {
            offsets,
            targets: pairs.into_iter().map(|(_, to)| to).collect(),
        }
    }

    #[inline]
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        let n = node as usize;
        &self.targets[self.offsets[n]..self.offsets[n + 1]]
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.neighbors(node).len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count() as NodeId)
            .flat_map(move |u| self.neighbors(u).iter().map(move |&v| (u, v)))
    }
}

#[derive(Debug, Clone, Default)]
pub struct DependencyGraph {
    names: Vec<PackageName>,
    index: HashMap<PackageName, NodeId>,
    /// dependent -> dependency
    forward: Adjacency,
    /// dependency -> dependent
    reverse: Adjacency,
}

impl DependencyGraph {
    pub fn from_snapshot(snapshot: &EcosystemSnapshot) -> Self {
        let names: Vec<PackageName> = snapshot.packages().keys().cloned().collect();
        let index: HashMap<PackageName, NodeId> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as NodeId))
            .collect();
        let pairs: Vec<(NodeId, NodeId)> = snapshot
            .edges()
            .iter()
            .map(|(from, to)| (index[from], index[to]))
            .collect();
        Self::assemble(names, index, pairs)
    }

    /// Graph over anonymous nodes `n0..n{count-1}`, zero-padded so that id
    /// order and name order agree. Useful for generated graphs.
    pub fn from_edges(node_count: usize, edges: &[(NodeId, NodeId)]) -> Self {
        let width = node_count.saturating_sub(1).to_string().len();
        let names: Vec<PackageName> = (0..node_count)
            .map(|i| PackageName::new(&format!("n{i:0width$}")).expect("generated name"))
            .collect();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as NodeId))
            .collect();
        let mut pairs: Vec<(NodeId, NodeId)> =
            edges.iter().copied().filter(|(u, v)| u != v).collect();
        pairs.sort_unstable();
        pairs.dedup();
        Self::assemble(names, index, pairs)
    }

    fn assemble(
        names: Vec<PackageName>,
        index: HashMap<PackageName, NodeId>,
        pairs: Vec<(NodeId, NodeId)>,
    ) -> Self {
        let n = names.len();
        let reverse = Adjacency::from_pairs(n, pairs.iter().map(|&(u, v)| (v, u)));
        let forward = Adjacency::from_pairs(n, pairs);
        DependencyGraph {
            names,
            index,
            forward,
            reverse,
        }
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.forward.edge_count()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[PackageName] {
        &self.names
    }

    pub fn name(&self, id: NodeId) -> &PackageName {
        &self.names[id as usize]
    }

    pub fn id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn require_id(&self, name: &str) -> Result<NodeId> {
        self.id(name).ok_or_else(|| Error::NotFound(name.to_string()))
    }

    pub fn forward(&self) -> &Adjacency {
        &self.forward
    }

    pub fn reverse(&self) -> &Adjacency {
        &self.reverse
    }

    pub fn dependencies(&self, id: NodeId) -> &[NodeId] {
        self.forward.neighbors(id)
    }

    pub fn dependents(&self, id: NodeId) -> &[NodeId] {
        self.reverse.neighbors(id)
    }

    /// Every node in the transitive dependency closure of `root`, root included,
    /// in ascending id order.
    pub fn closure_ids(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![root];
        seen[root as usize] = true;
        while let Some(u) = stack.pop() {
            for &v in self.dependencies(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    stack.push(v);
                }
            }
        }
        (0..self.node_count() as NodeId)
            .filter(|&i| seen[i as usize])
            .collect()
    }

    /// Names in the transitive dependency closure of `root` (root included).
    pub fn closure(&self, root: &str) -> Result<Vec<PackageName>> {
        let id = self.require_id(root)?;
        Ok(self
            .closure_ids(id)
            .into_iter()
            .map(|i| self.name(i).clone())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{build_snapshot, BuildOptions, RawPackageRecord};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn snap(spec: &[(&str, &[&str])]) -> EcosystemSnapshot {
        let records: Vec<RawPackageRecord> = spec
            .iter()
            .map(|(n, deps)| RawPackageRecord {
                name: n.to_string(),
                requirements: deps.iter().map(|d| d.to_string()).collect(),
                ..Default::default()
            })
            .collect();
        build_snapshot(&records, BuildOptions::default()).unwrap()
    }

    #[test]
    fn single_edge() {
        let g = DependencyGraph::from_snapshot(&snap(&[("a", &["b"]), ("b", &[])]));
        assert_eq!(g.node_count(), 2);
        let (a, b) = (g.id("a").unwrap(), g.id("b").unwrap());
        assert_eq!(g.dependencies(a), &[b]);
        assert_eq!(g.dependents(b), &[a]);
    }

    #[test]
    fn empty_graph() {
        let g = DependencyGraph::from_snapshot(&snap(&[]));
        assert!(g.is_empty());
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn forward_and_reverse_are_transposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1000;
        let edges: Vec<(NodeId, NodeId)> = (0..4000)
            .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
            .collect();
        let g = DependencyGraph::from_edges(n as usize, &edges);
        let mut fwd: Vec<_> = g.forward().edges().collect();
        let mut rev: Vec<_> = g.reverse().edges().map(|(u, v)| (v, u)).collect();
        fwd.sort();
        rev.sort();
        assert_eq!(fwd, rev);
        assert_eq!(g.node_count(), 1000);
    }

    #[test]
    fn closures() {
        let g = DependencyGraph::from_snapshot(&snap(&[
            ("a", &[]),
            ("b", &["a"]),
            ("c", &["b"]),
            ("x", &["y"]),
            ("y", &["z"]),
            ("z", &["x", "a"]),
        ]));
        let names = |v: Vec<PackageName>| v.into_iter().map(|n| n.into_string()).collect::<Vec<_>>();
        assert_eq!(names(g.closure("a").unwrap()), ["a"]);
        assert_eq!(names(g.closure("c").unwrap()), ["a", "b", "c"]);
        assert_eq!(names(g.closure("y").unwrap()), ["a", "x", "y", "z"]);
        assert!(matches!(g.closure("nope"), Err(Error::NotFound(_))));
    }

    #[test]
    fn generated_names_sort_like_ids() {
        let g = DependencyGraph::from_edges(120, &[]);
        let mut sorted = g.names().to_vec();
        sorted.sort();
        assert_eq!(sorted, g.names());
    }
}
