//! Threshold selection over normalized impact shares.
//!
//! Packages are ranked by share (descending, ties by name) and the shortest
//! prefix whose cumulative share reaches `tau` is selected. Cumulative shares
//! are computed as a compensated running sum of raw impacts divided by the
//! compensated sum over the whole sequence, so a prefix covering every
//! non-zero impact lands on exactly 1.0.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ecosystem::Ecosystem;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::impact::ImpactReport;
use crate::name::PackageName;
use crate::stats::CompensatedSum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedEntry {
    pub rank: usize,
    pub package: PackageName,
    pub share: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub scenario: String,
    pub tau: f64,
    pub selected: Vec<SelectedEntry>,
    pub achieved_share: f64,
    /// Candidate order, including pinned packages first. Not serialized.
    #[serde(skip)]
    pub ranking: Vec<NodeId>,
    /// Node ids of `selected`, in selection order.
    #[serde(skip)]
    pub selected_ids: Vec<NodeId>,
}

impl SelectionResult {
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn package_names(&self) -> BTreeSet<PackageName> {
        self.selected.iter().map(|e| e.package.clone()).collect()
    }

    /// `rank,package,share,cumulative` rows in selection order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "package", "share", "cumulative"])?;
        for e in &self.selected {
            w.write_record([
                e.rank.to_string(),
                e.package.to_string(),
                e.share.to_string(),
                e.cumulative.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("writing selection", e))?;
        Ok(())
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("tau {tau} outside (0, 1]")))
    }
}

/// All node ids by share descending; equal shares keep name order.
pub fn rank_by_share(shares: &[f64]) -> Vec<NodeId> {
    let mut order: Vec<NodeId> = (0..shares.len() as NodeId).collect();
    // stable sort keeps ascending id (= name) order among ties
    order.sort_by(|&a, &b| {
        shares[b as usize]
            .partial_cmp(&shares[a as usize])
            .expect("shares are finite")
    });
    order
}

/// Shortest share-ranked prefix reaching `tau`.
pub fn select_to_threshold(eco: &Ecosystem, report: &ImpactReport, tau: f64) -> Result<SelectionResult> {
    select_constrained(eco, report, tau, &BTreeSet::new(), &BTreeSet::new())
}

/// Threshold selection with pinned packages placed first (their shares count
/// toward `tau`) and excluded packages skipped. With both sets empty this is
/// exactly [`select_to_threshold`].
pub fn select_constrained(
    eco: &Ecosystem,
    report: &ImpactReport,
    tau: f64,
    pinned: &BTreeSet<NodeId>,
    excluded: &BTreeSet<NodeId>,
) -> Result<SelectionResult> {
    check_tau(tau)?;
    let shares = report.shares().ok_or_else(|| {
        Error::Invariant(format!("report {:?} is not normalized", report.label()))
    })?;
    if let Some(id) = pinned.intersection(excluded).next() {
        return Err(Error::domain(format!(
            "{} is both pinned and excluded",
            eco.graph().name(*id)
        )));
    }

    let ranked = rank_by_share(shares);
    let mut sequence: Vec<NodeId> = ranked.iter().copied().filter(|i| pinned.contains(i)).collect();
    sequence.extend(
        ranked
            .iter()
            .copied()
            .filter(|i| !pinned.contains(i) && !excluded.contains(i)),
    );
    let skipped = ranked.iter().copied().filter(|i| excluded.contains(i));

    let total = sequence
        .iter()
        .copied()
        .chain(skipped)
        .map(|i| report.raw(i))
        .collect::<CompensatedSum>()
        .value();

    let mut acc = CompensatedSum::new();
    let mut selected = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for (pos, &id) in sequence.iter().enumerate() {
        acc.add(report.raw(id));
        let cumulative = acc.value() / total;
        best = best.max(cumulative);
        selected.push(SelectedEntry {
            rank: pos + 1,
            package: eco.graph().name(id).clone(),
            share: shares[id as usize],
            cumulative,
        });
        if cumulative >= tau && pos + 1 >= pinned.len() {
            let selected_ids = sequence[..=pos].to_vec();
            return Ok(SelectionResult {
                scenario: report.label().to_string(),
                tau,
                achieved_share: cumulative,
                selected,
                ranking: sequence,
                selected_ids,
            });
        }
    }
    Err(Error::ThresholdUnreachable {
        tau,
        achievable: if best.is_finite() { best } else { 0.0 },
    })
}

/// Union of two selections as sorted node ids.
pub fn union_selection(a: &SelectionResult, b: &SelectionResult) -> Vec<NodeId> {
    let set: BTreeSet<NodeId> = a.selected_ids.iter().chain(&b.selected_ids).copied().collect();
    set.into_iter().collect()
}
