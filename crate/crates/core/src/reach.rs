//! Exact transitive-dependent counts.
//!
//! `reach(p)` is the number of packages whose transitive dependency closure
//! contains `p`, counting `p` itself. Counting happens on the condensed DAG:
//! every component accumulates the union of its dependents' ancestor sets as
//! a bit row over node columns, walking components in topological order.
//!
//! Bit rows for all components would need `components × nodes` bits, so the
//! column space is cut into windows sized to a memory budget and each window
//! is a separate pass. Columns are laid out in topological order, which means
//! a pass never touches components that precede its window.

use std::io::Write;

use rayon::prelude::*;

use crate::error::Result;
use crate::graph::DependencyGraph;
use crate::name::PackageName;
use crate::scc::{condense, CondensedDag};

#[derive(Debug, Clone, Copy)]
pub struct ReachOptions {
    /// Upper bound on bit-row memory across concurrently running passes.
    pub memory_budget_bytes: usize,
}

impl Default for ReachOptions {
    fn default() -> Self {
        ReachOptions {
            memory_budget_bytes: 256 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachTable {
    names: Vec<PackageName>,
    reach: Vec<u64>,
}

impl ReachTable {
    pub fn values(&self) -> &[u64] {
        &self.reach
    }

    pub fn by_id(&self, id: u32) -> u64 {
        self.reach[id as usize]
    }

    pub fn get(&self, name: &str) -> Option<u64> {
        self.names
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| self.reach[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PackageName, u64)> {
        self.names.iter().zip(self.reach.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.reach.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reach.is_empty()
    }

    /// `package,reach` rows sorted by name.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["package", "reach"])?;
        for (name, reach) in self.iter() {
            w.write_record([name.as_str(), &reach.to_string()])?;
        }
        w.flush().map_err(|e| crate::error::Error::io("writing reach table", e))?;
        Ok(())
    }
}

pub fn reach_counts(graph: &DependencyGraph) -> ReachTable {
    reach_counts_with(graph, &condense(graph), ReachOptions::default())
}

pub fn reach_counts_with(
    graph: &DependencyGraph,
    dag: &CondensedDag,
    options: ReachOptions,
) -> ReachTable {
    let per_component = component_reach(dag, options);
    let reach = dag
        .components()
        .iter()
        .map(|&c| per_component[c as usize])
        .collect();
    ReachTable {
        names: graph.names().to_vec(),
        reach,
    }
}

struct Layout {
    topo: Vec<u32>,
    /// Topological position of each component.
    position: Vec<usize>,
    /// First column of the component at each topological position, plus a
    /// trailing total.
    col_start: Vec<usize>,
}

fn component_reach(dag: &CondensedDag, options: ReachOptions) -> Vec<u64> {
    let count = dag.component_count();
    if count == 0 {
        return Vec::new();
    }
    let topo = dag.topological_order();
    let mut position = vec![0usize; count];
    let mut col_start = Vec::with_capacity(count + 1);
    let mut col = 0usize;
    for (t, &c) in topo.iter().enumerate() {
        position[c as usize] = t;
        col_start.push(col);
        col += dag.size(c) as usize;
    }
    col_start.push(col);
    let layout = Layout {
        topo,
        position,
        col_start,
    };
    let columns = col;

    let threads = rayon::current_num_threads().max(1);
    let full_words = columns.div_ceil(64);
    let words = if count * full_words * 8 <= options.memory_budget_bytes {
        full_words
    } else {
        (options.memory_budget_bytes / threads / (8 * count)).clamp(1, full_words)
    };
    let window = words * 64;
    let windows: Vec<(usize, usize)> = (0..columns)
        .step_by(window)
        .map(|lo| (lo, (lo + window).min(columns)))
        .collect();

    windows
        .par_iter()
        .map(|&(lo, hi)| window_pass(dag, &layout, lo, hi))
        .reduce(
            || vec![0u64; count],
            |mut acc, part| {
                for (a, p) in acc.iter_mut().zip(part) {
                    *a += p;
                }
                acc
            },
        )
}

/// Counts, for every component, ancestor nodes whose column lies in `[lo, hi)`.
fn window_pass(dag: &CondensedDag, layout: &Layout, lo: usize, hi: usize) -> Vec<u64> {
    let count = dag.component_count();
    let words = (hi - lo).div_ceil(64);
    // First topological position owning a column inside the window.
    let first = layout.col_start.partition_point(|&s| s <= lo) - 1;
    let rows = count - first;
    let mut bits = vec![0u64; rows * words];
    let mut counts = vec![0u64; count];

    for t in first..count {
        let comp = layout.topo[t];
        let r = t - first;
        let (own_lo, own_hi) = (layout.col_start[t].max(lo), layout.col_start[t + 1].min(hi));
        {
            let row = &mut bits[r * words..(r + 1) * words];
            for c in own_lo..own_hi.max(own_lo) {
                let k = c - lo;
                row[k / 64] |= 1u64 << (k % 64);
            }
        }
        let (head, tail) = bits.split_at_mut((r + 1) * words);
        let row = &head[r * words..];
        let popcount: u64 = row.iter().map(|w| w.count_ones() as u64).sum();
        counts[comp as usize] = popcount;
        if popcount == 0 {
            continue;
        }
        for &dep in dag.dag().neighbors(comp) {
            let dr = layout.position[dep as usize] - first - (r + 1);
            let target = &mut tail[dr * words..(dr + 1) * words];
            for (t, s) in target.iter_mut().zip(row) {
                *t |= *s;
            }
        }
    }
    counts
}
