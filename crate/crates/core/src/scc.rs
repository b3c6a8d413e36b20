//! Strongly connected components and the condensed DAG.

use crate::graph::{Adjacency, DependencyGraph, NodeId};

pub type ComponentId = u32;

const UNVISITED: u32 = u32::MAX;

/// The graph with every strongly connected component collapsed to one node.
///
/// Components are numbered by their smallest member id, so numbering is
/// independent of traversal order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondensedDag {
    component_of: Vec<ComponentId>,
    component_sizes: Vec<u32>,
    /// Inter-component edges, dependent component -> dependency component.
    dag: Adjacency,
}

impl CondensedDag {
    pub fn component_of(&self, node: NodeId) -> ComponentId {
        self.component_of[node as usize]
    }

    pub fn components(&self) -> &[ComponentId] {
        &self.component_of
    }

    pub fn component_count(&self) -> usize {
        self.component_sizes.len()
    }

    pub fn size(&self, component: ComponentId) -> u32 {
        self.component_sizes[component as usize]
    }

    pub fn sizes(&self) -> &[u32] {
        &self.component_sizes
    }

    pub fn dag(&self) -> &Adjacency {
        &self.dag
    }

    /// Components ordered so that every dependent precedes its dependencies.
    pub fn topological_order(&self) -> Vec<ComponentId> {
        let count = self.component_count();
        let mut indegree = vec![0u32; count];
        for (_, v) in self.dag.edges() {
            indegree[v as usize] += 1;
        }
        let mut order: Vec<ComponentId> = (0..count as ComponentId)
            .filter(|&c| indegree[c as usize] == 0)
            .collect();
        let mut head = 0;
        while head < order.len() {
            let c = order[head];
            head += 1;
            for &d in self.dag.neighbors(c) {
                indegree[d as usize] -= 1;
                if indegree[d as usize] == 0 {
                    order.push(d);
                }
            }
        }
        debug_assert_eq!(order.len(), count, "condensed graph has a cycle");
        order
    }
}

/// Collapses strongly connected components (iterative Tarjan).
pub fn condense(graph: &DependencyGraph) -> CondensedDag {
    let adj = graph.forward();
    let n = graph.node_count();

    let mut index = vec![UNVISITED; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<NodeId> = Vec::new();
    let mut calls: Vec<(NodeId, usize)> = Vec::new();
    let mut raw_component = vec![UNVISITED; n];
    let mut next_index = 0u32;
    let mut raw_count = 0u32;

    for start in 0..n as NodeId {
        if index[start as usize] != UNVISITED {
            continue;
        }
        index[start as usize] = next_index;
        low[start as usize] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start as usize] = true;
        calls.push((start, 0));

        while let Some(frame) = calls.last_mut() {
            let v = frame.0;
            let neighbors = adj.neighbors(v);
            if frame.1 < neighbors.len() {
                let w = neighbors[frame.1];
                frame.1 += 1;
                if index[w as usize] == UNVISITED {
                    index[w as usize] = next_index;
                    low[w as usize] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    calls.push((w, 0));
                } else if on_stack[w as usize] {
                    low[v as usize] = low[v as usize].min(index[w as usize]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                low[parent as usize] = low[parent as usize].min(low[v as usize]);
            }
            if low[v as usize] == index[v as usize] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w as usize] = false;
                    raw_component[w as usize] = raw_count;
                    if w == v {
                        break;
                    }
                }
                raw_count += 1;
            }
        }
    }

    // Renumber by smallest member: the first node met in id order for each
    // raw component is its smallest member.
    let mut renumber = vec![UNVISITED; raw_count as usize];
    let mut component_of = vec![0 as ComponentId; n];
    let mut component_sizes = Vec::with_capacity(raw_count as usize);
    for node in 0..n {
        let raw = raw_component[node] as usize;
        if renumber[raw] == UNVISITED {
            renumber[raw] = component_sizes.len() as ComponentId;
            component_sizes.push(0);
        }
        let c = renumber[raw];
        component_of[node] = c;
        component_sizes[c as usize] += 1;
    }

    let mut pairs: Vec<(ComponentId, ComponentId)> = adj
        .edges()
        .map(|(u, v)| (component_of[u as usize], component_of[v as usize]))
        .filter(|(cu, cv)| cu != cv)
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let dag = Adjacency::from_pairs(component_sizes.len(), pairs);

    CondensedDag {
        component_of,
        component_sizes,
        dag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reachable_from(g: &DependencyGraph, s: NodeId) -> Vec<bool> {
        let mut seen = vec![false; g.node_count()];
        seen[s as usize] = true;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in g.dependencies(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    #[test]
    fn chain_is_all_singletons() {
        let g = DependencyGraph::from_edges(3, &[(0, 1), (1, 2)]);
        let c = condense(&g);
        assert_eq!(c.component_count(), 3);
        assert_eq!(c.sizes(), &[1, 1, 1]);
        assert_eq!(c.topological_order(), vec![0, 1, 2]);
    }

    #[test]
    fn two_cycle_collapses() {
        let g = DependencyGraph::from_edges(2, &[(0, 1), (1, 0)]);
        let c = condense(&g);
        assert_eq!(c.component_count(), 1);
        assert_eq!(c.size(0), 2);
        assert_eq!(c.dag().edge_count(), 0);
    }

    #[test]
    fn numbering_follows_smallest_member() {
        // 3 <-> 1 form a component whose smallest member is 1.
        let g = DependencyGraph::from_edges(4, &[(3, 1), (1, 3), (0, 3), (1, 2)]);
        let c = condense(&g);
        assert_eq!(c.components(), &[0, 1, 2, 1]);
    }

    #[test]
    fn matches_pairwise_reachability_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let n = 200u32;
            let mut edges: Vec<(NodeId, NodeId)> = (0..300)
                .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
                .collect();
            // planted cycles
            for _ in 0..5 {
                let len = rng.random_range(2..6);
                let nodes: Vec<NodeId> = (0..len).map(|_| rng.random_range(0..n)).collect();
                for i in 0..len {
                    edges.push((nodes[i], nodes[(i + 1) % len]));
                }
            }
            let g = DependencyGraph::from_edges(n as usize, &edges);
            let c = condense(&g);
            let reach: Vec<Vec<bool>> = (0..n).map(|s| reachable_from(&g, s)).collect();
            for u in 0..n as usize {
                for v in 0..n as usize {
                    let mutual = reach[u][v] && reach[v][u];
                    assert_eq!(c.components()[u] == c.components()[v], mutual, "{u} {v}");
                }
            }
            assert_eq!(c.sizes().iter().map(|&s| s as usize).sum::<usize>(), n as usize);
            let order = c.topological_order();
            let mut pos = vec![0; c.component_count()];
            for (i, &comp) in order.iter().enumerate() {
                pos[comp as usize] = i;
            }
            for (a, b) in c.dag().edges() {
                assert!(pos[a as usize] < pos[b as usize]);
            }
        }
    }

    #[test]
    fn deep_chain_does_not_overflow() {
        let n = 200_000u32;
        let edges: Vec<(NodeId, NodeId)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let g = DependencyGraph::from_edges(n as usize, &edges);
        assert_eq!(condense(&g).component_count(), n as usize);
    }
}
