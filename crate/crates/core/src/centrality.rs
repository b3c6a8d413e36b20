//! PageRank over the dependency graph.
//!
//! Rank flows along dependent -> dependency edges, so heavily depended-upon
//! packages score highest. Packages without dependencies are dangling and
//! spread their mass uniformly. Each iteration pulls contributions through
//! the reverse adjacency; nodes are independent within an iteration, so the
//! update parallelizes without changing the floating-point result.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, NodeId};
use crate::stats::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankConfig {
    pub damping: f64,
    /// L1 change between iterations below which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        PageRankConfig {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRankScores {
    pub scores: Vec<f64>,
    pub damping: f64,
    pub iterations_used: usize,
    pub residual: f64,
    pub converged: bool,
}

impl PageRankScores {
    pub fn score(&self, id: NodeId) -> f64 {
        self.scores[id as usize]
    }

    /// `package,score` rows sorted by name.
    pub fn write_csv<W: Write>(&self, graph: &DependencyGraph, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["package", "score"])?;
        for (id, s) in self.scores.iter().enumerate() {
            w.write_record([graph.name(id as NodeId).as_str(), &s.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("writing pagerank scores", e))?;
        Ok(())
    }
}

pub fn pagerank(graph: &DependencyGraph, config: PageRankConfig) -> Result<PageRankScores> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::domain("pagerank needs a non-empty graph"));
    }
    let d = config.damping;
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::domain(format!("damping {d} outside (0, 1)")));
    }
    let nf = n as f64;
    let out_degree: Vec<f64> = (0..n as NodeId)
        .map(|i| graph.dependencies(i).len() as f64)
        .collect();
    let dangling: Vec<NodeId> = (0..n as NodeId)
        .filter(|&i| out_degree[i as usize] == 0.0)
        .collect();

    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    while iterations < config.max_iter {
        iterations += 1;
        let dangling_mass = compensated_sum(dangling.iter().map(|&i| rank[i as usize]));
        let base = (1.0 - d) / nf + d * dangling_mass / nf;
        next.par_iter_mut().enumerate().for_each(|(j, slot)| {
            let incoming: f64 = graph
                .dependents(j as NodeId)
                .iter()
                .map(|&i| rank[i as usize] / out_degree[i as usize])
                .sum();
            *slot = base + d * incoming;
        });
        residual = compensated_sum(rank.iter().zip(&next).map(|(a, b)| (a - b).abs()));
        std::mem::swap(&mut rank, &mut next);
        if residual < config.tol {
            break;
        }
    }

    let total = compensated_sum(rank.iter().copied());
    for r in &mut rank {
        *r /= total;
    }

    Ok(PageRankScores {
        scores: rank,
        damping: d,
        iterations_used: iterations,
        converged: residual < config.tol,
        residual,
    })
}

/// The `k` highest-scoring nodes; ties resolved by name (= id) order.
pub fn top_k(scores: &[f64], k: usize) -> Result<Vec<NodeId>> {
    if k > scores.len() {
        return Err(Error::domain(format!(
            "k = {k} exceeds the {} scored nodes",
            scores.len()
        )));
    }
    let mut order: Vec<NodeId> = (0..scores.len() as NodeId).collect();
    order.sort_by(|&a, &b| scores[b as usize].total_cmp(&scores[a as usize]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(order)
}
