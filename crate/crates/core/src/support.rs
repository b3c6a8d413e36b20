//! Scorecards for support sets, whether impact-selected or taken from an
//! existing funding mechanism.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ecosystem::Ecosystem;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::impact::ImpactReport;
use crate::name::PackageName;
use crate::stats::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetSource {
    ImpactSelection,
    ExternalList,
}

impl SetSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SetSource::ImpactSelection => "impact-selection",
            SetSource::ExternalList => "external-list",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSet {
    pub label: String,
    pub members: BTreeSet<PackageName>,
    pub source: SetSource,
    /// Entries that did not resolve to a snapshot package, as given.
    pub unresolved: Vec<String>,
}

impl SupportSet {
    /// Normalizes and resolves `names`; duplicates collapse, misses are kept
    /// in `unresolved`.
    pub fn resolve<'a>(
        label: impl Into<String>,
        names: impl IntoIterator<Item = &'a str>,
        source: SetSource,
        eco: &Ecosystem,
    ) -> Self {
        let mut members = BTreeSet::new();
        let mut unresolved = Vec::new();
        for raw in names {
            match PackageName::new(raw) {
                Ok(name) if eco.graph().id(&name).is_some() => {
                    members.insert(name);
                }
                _ => unresolved.push(raw.to_string()),
            }
        }
        SupportSet {
            label: label.into(),
            members,
            source,
            unresolved,
        }
    }

    pub fn from_ids(label: impl Into<String>, ids: &[NodeId], source: SetSource, eco: &Ecosystem) -> Self {
        SupportSet {
            label: label.into(),
            members: ids.iter().map(|&i| eco.graph().name(i).clone()).collect(),
            source,
            unresolved: Vec::new(),
        }
    }

    /// Reads one package name per line; blank lines and `#` comments are
    /// skipped. The label defaults to the file stem.
    pub fn load(path: &Path, eco: &Ecosystem) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let mut lines = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
            let line = line.trim();
            if !line.is_empty() && !line.starts_with('#') {
                lines.push(line.to_string());
            }
        }
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Ok(Self::resolve(
            label,
            lines.iter().map(String::as_str),
            SetSource::ExternalList,
            eco,
        ))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member ids, ascending.
    pub fn ids(&self, eco: &Ecosystem) -> Vec<NodeId> {
        // members are resolved at construction
        self.members
            .iter()
            .filter_map(|m| eco.graph().id(m))
            .collect()
    }
}

fn fraction(count: usize, of: usize) -> f64 {
    if of == 0 {
        0.0
    } else {
        count as f64 / of as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaintainerReach {
    /// Member count of each package's owner, summed per package.
    pub total_individuals: usize,
    pub distinct_maintainers: usize,
    pub single_maintainer_packages: usize,
    pub single_maintainer_fraction: f64,
    pub packages_without_owner: usize,
}

pub fn maintainer_reach(set: &SupportSet, eco: &Ecosystem) -> MaintainerReach {
    let mut total = 0;
    let mut distinct = BTreeSet::new();
    let mut single = 0;
    let mut no_owner = 0;
    for name in &set.members {
        match eco.snapshot().get(name).and_then(|r| r.repository_owner.as_ref()) {
            Some(owner) => {
                total += owner.member_ids.len();
                distinct.extend(owner.member_ids.iter());
                if owner.member_ids.len() == 1 {
                    single += 1;
                }
            }
            None => no_owner += 1,
        }
    }
    MaintainerReach {
        total_individuals: total,
        distinct_maintainers: distinct.len(),
        single_maintainer_packages: single,
        single_maintainer_fraction: fraction(single, set.len()),
        packages_without_owner: no_owner,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accessibility {
    pub contact_count: usize,
    pub donation_count: usize,
    pub contact_and_donation_count: usize,
    pub neither_count: usize,
    pub contact_fraction: f64,
    pub donation_fraction: f64,
    pub contact_and_donation_fraction: f64,
    pub neither_fraction: f64,
    /// Set had no members; every fraction is reported as 0.
    pub empty_set: bool,
}

pub fn metadata_accessibility(set: &SupportSet, eco: &Ecosystem) -> Accessibility {
    let (mut contact, mut donation, mut both, mut neither) = (0, 0, 0, 0);
    for record in set.members.iter().filter_map(|m| eco.snapshot().get(m)) {
        let (c, d) = (record.has_contact_info, record.has_donation_link);
        contact += c as usize;
        donation += d as usize;
        both += (c && d) as usize;
        neither += (!c && !d) as usize;
    }
    let n = set.len();
    Accessibility {
        contact_count: contact,
        donation_count: donation,
        contact_and_donation_count: both,
        neither_count: neither,
        contact_fraction: fraction(contact, n),
        donation_fraction: fraction(donation, n),
        contact_and_donation_fraction: fraction(both, n),
        neither_fraction: fraction(neither, n),
        empty_set: n == 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedPackage {
    pub package: PackageName,
    pub reach: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionReport {
    /// Minimum reach used for the comparable-reach rule (impact selections only).
    pub reach_threshold: Option<u64>,
    pub packages: Vec<ExcludedPackage>,
    pub count: usize,
    /// For impact selections: count over (members + count). For external
    /// lists: count over members.
    pub fraction: f64,
}

/// Packages the set leaves out, or cannot assess, for lack of a repository link.
///
/// Impact selections report non-member packages without a repository link
/// whose reach is at least `reach_threshold`, defaulting to the smallest
/// reach inside the selection. External lists report their own members
/// without a repository link.
pub fn exclusion_analysis(set: &SupportSet, eco: &Ecosystem, reach_threshold: Option<u64>) -> ExclusionReport {
    let reach_of = |name: &PackageName| eco.reach().get(name).unwrap_or(0);
    match set.source {
        SetSource::ImpactSelection => {
            let threshold = reach_threshold.or_else(|| set.members.iter().map(reach_of).min());
            let packages: Vec<ExcludedPackage> = match threshold {
                Some(t) => eco
                    .snapshot()
                    .packages()
                    .values()
                    .filter(|r| !r.has_repository_link && !set.members.contains(&r.name))
                    .map(|r| ExcludedPackage {
                        package: r.name.clone(),
                        reach: reach_of(&r.name),
                    })
                    .filter(|e| e.reach >= t)
                    .collect(),
                None => Vec::new(),
            };
            let count = packages.len();
            ExclusionReport {
                reach_threshold: threshold,
                fraction: fraction(count, set.len() + count),
                packages,
                count,
            }
        }
        SetSource::ExternalList => {
            let packages: Vec<ExcludedPackage> = set
                .members
                .iter()
                .filter(|m| eco.snapshot().get(m).is_some_and(|r| !r.has_repository_link))
                .map(|m| ExcludedPackage {
                    package: m.clone(),
                    reach: reach_of(m),
                })
                .collect();
            let count = packages.len();
            ExclusionReport {
                reach_threshold: None,
                fraction: fraction(count, set.len()),
                packages,
                count,
            }
        }
    }
}

/// One comparable row per strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyEvaluation {
    pub label: String,
    pub source: SetSource,
    pub package_count: usize,
    pub ecosystem_fraction: f64,
    pub improvement_share: f64,
    pub regression_share: f64,
    pub total_individuals: usize,
    pub distinct_maintainers: usize,
    pub single_maintainer_packages: usize,
    pub single_maintainer_fraction: f64,
    pub contact_count: usize,
    pub contact_fraction: f64,
    pub donation_count: usize,
    pub donation_fraction: f64,
    pub contact_and_donation_count: usize,
    pub contact_and_donation_fraction: f64,
    pub excluded_no_repo: usize,
    pub excluded_no_repo_fraction: f64,
    pub unresolved_count: usize,
}

pub const STRATEGY_CSV_HEADER: [&str; 19] = [
    "label",
    "source",
    "package_count",
    "ecosystem_fraction",
    "improvement_share",
    "regression_share",
    "total_individuals",
    "distinct_maintainers",
    "single_maintainer_packages",
    "single_maintainer_fraction",
    "contact_count",
    "contact_fraction",
    "donation_count",
    "donation_fraction",
    "contact_and_donation_count",
    "contact_and_donation_fraction",
    "excluded_no_repo",
    "excluded_no_repo_fraction",
    "unresolved_count",
];

impl StrategyEvaluation {
    fn csv_record(&self) -> [String; 19] {
        [
            self.label.clone(),
            self.source.as_str().to_string(),
            self.package_count.to_string(),
            self.ecosystem_fraction.to_string(),
            self.improvement_share.to_string(),
            self.regression_share.to_string(),
            self.total_individuals.to_string(),
            self.distinct_maintainers.to_string(),
            self.single_maintainer_packages.to_string(),
            self.single_maintainer_fraction.to_string(),
            self.contact_count.to_string(),
            self.contact_fraction.to_string(),
            self.donation_count.to_string(),
            self.donation_fraction.to_string(),
            self.contact_and_donation_count.to_string(),
            self.contact_and_donation_fraction.to_string(),
            self.excluded_no_repo.to_string(),
            self.excluded_no_repo_fraction.to_string(),
            self.unresolved_count.to_string(),
        ]
    }
}

pub fn write_strategies_csv<W: Write>(rows: &[StrategyEvaluation], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STRATEGY_CSV_HEADER)?;
    for row in rows {
        w.write_record(row.csv_record())?;
    }
    w.flush().map_err(|e| Error::io("writing strategies", e))?;
    Ok(())
}

/// Cumulative share of `members` against the global scenario total.
///
/// Restricting a scenario to the members leaves each member's impact
/// unchanged, so the restricted total is the sum of their global impacts.
pub fn set_share(report: &ImpactReport, ids: &[NodeId]) -> Result<f64> {
    let total = report.total();
    if total == 0.0 {
        return Err(Error::DegenerateScenario {
            label: report.label().to_string(),
        });
    }
    let mut ids = ids.to_vec();
    ids.sort_unstable();
    Ok(compensated_sum(ids.iter().map(|&i| report.raw(i))) / total)
}

/// Full scorecard for one set under the global improvement and regression
/// scenarios.
pub fn evaluate_support_set(
    set: &SupportSet,
    eco: &Ecosystem,
    improvement: &ImpactReport,
    regression: &ImpactReport,
    reach_threshold: Option<u64>,
) -> Result<StrategyEvaluation> {
    let ids = set.ids(eco);
    let reach = maintainer_reach(set, eco);
    let access = metadata_accessibility(set, eco);
    let exclusion = exclusion_analysis(set, eco, reach_threshold);
    Ok(StrategyEvaluation {
        label: set.label.clone(),
        source: set.source,
        package_count: set.len(),
        ecosystem_fraction: fraction(set.len(), eco.len()),
        improvement_share: set_share(improvement, &ids)?,
        regression_share: set_share(regression, &ids)?,
        total_individuals: reach.total_individuals,
        distinct_maintainers: reach.distinct_maintainers,
        single_maintainer_packages: reach.single_maintainer_packages,
        single_maintainer_fraction: reach.single_maintainer_fraction,
        contact_count: access.contact_count,
        contact_fraction: access.contact_fraction,
        donation_count: access.donation_count,
        donation_fraction: access.donation_fraction,
        contact_and_donation_count: access.contact_and_donation_count,
        contact_and_donation_fraction: access.contact_and_donation_fraction,
        excluded_no_repo: exclusion.count,
        excluded_no_repo_fraction: exclusion.fraction,
        unresolved_count: set.unresolved.len(),
    })
}
