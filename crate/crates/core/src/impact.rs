//! Dependency-propagated maintenance impact.
//!
//! The ecosystem state is `Σ_p reach(p) · m_p`. A scenario assigns each
//! package a score change `Δm_p`; the impact of `p` is `Δm_p · reach(p)` and
//! its share is that impact over the scenario total.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ecosystem::Ecosystem;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::name::PackageName;
use crate::snapshot::MAX_MAINTAINED_SCORE;
use crate::stats::CompensatedSum;

/// Slack allowed when checking `m + Δm` against the score bounds.
const BOUNDS_SLACK: f64 = 1e-9;

pub const IMPROVEMENT: &str = "improvement";
pub const REGRESSION: &str = "regression";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    /// Missing packages have a zero delta.
    pub deltas: BTreeMap<PackageName, f64>,
}

impl Scenario {
    /// Every scored package raised to the maximum score.
    pub fn improvement(eco: &Ecosystem) -> Self {
        Self::towards(eco, IMPROVEMENT, MAX_MAINTAINED_SCORE)
    }

    /// Every scored package dropped to zero.
    pub fn regression(eco: &Ecosystem) -> Self {
        Self::towards(eco, REGRESSION, 0.0)
    }

    fn towards(eco: &Ecosystem, label: &str, target: f64) -> Self {
        let deltas = eco
            .snapshot()
            .packages()
            .values()
            .filter_map(|r| r.maintained_score.map(|m| (r.name.clone(), target - m)))
            .collect();
        Scenario {
            label: label.to_string(),
            deltas,
        }
    }

    /// Same scenario restricted to `members`.
    pub fn restricted_to<'a>(
        &self,
        label: &str,
        members: impl IntoIterator<Item = &'a PackageName>,
    ) -> Self {
        let deltas = members
            .into_iter()
            .filter_map(|p| self.deltas.get(p).map(|&d| (p.clone(), d)))
            .collect();
        Scenario {
            label: label.to_string(),
            deltas,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Scenario {
            label: self.label.clone(),
            deltas: self.deltas.iter().map(|(k, v)| (k.clone(), v * factor)).collect(),
        }
    }

    /// Reads `{"label": ..., "deltas": {package: delta}}`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Ecosystem state and the packages that did not contribute for lack of a score.
#[derive(Debug, Clone, PartialEq)]
pub struct EcosystemState {
    pub value: f64,
    pub excluded: Vec<PackageName>,
}

/// `Σ_p reach(p) · m_p` over the packages present in `scores`.
pub fn ecosystem_state(eco: &Ecosystem, scores: &BTreeMap<PackageName, f64>) -> Result<EcosystemState> {
    let mut dense = vec![None; eco.len()];
    for (name, &m) in scores {
        let id = eco.graph().require_id(name)?;
        if !(0.0..=MAX_MAINTAINED_SCORE).contains(&m) {
            return Err(Error::domain(format!("score {m} for {name} outside [0, 10]")));
        }
        dense[id as usize] = Some(m);
    }
    let value = eco
        .reach()
        .values()
        .iter()
        .zip(&dense)
        .filter_map(|(&r, m)| m.map(|m| r as f64 * m))
        .collect::<CompensatedSum>()
        .value();
    let excluded = dense
        .iter()
        .enumerate()
        .filter(|(_, m)| m.is_none())
        .map(|(i, _)| eco.graph().name(i as NodeId).clone())
        .collect();
    Ok(EcosystemState { value, excluded })
}

/// Per-package impact of one scenario, indexed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactReport {
    label: String,
    delta: Vec<f64>,
    raw: Vec<f64>,
    total: f64,
    shares: Option<Vec<f64>>,
    excluded: Vec<NodeId>,
}

impl ImpactReport {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn delta(&self, id: NodeId) -> f64 {
        self.delta[id as usize]
    }

    pub fn raw(&self, id: NodeId) -> f64 {
        self.raw[id as usize]
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.raw
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn shares(&self) -> Option<&[f64]> {
        self.shares.as_deref()
    }

    pub fn share(&self, id: NodeId) -> Option<f64> {
        self.shares.as_ref().map(|s| s[id as usize])
    }

    /// Packages with no maintained score; their delta is zero.
    pub fn excluded(&self) -> &[NodeId] {
        &self.excluded
    }

    pub fn is_normalized(&self) -> bool {
        self.shares.is_some()
    }

    /// `package,reach,delta,impact,share` rows sorted by name. The share
    /// column is empty for unnormalized reports.
    pub fn write_csv<W: Write>(&self, eco: &Ecosystem, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["package", "reach", "delta", "impact", "share"])?;
        for id in 0..eco.len() as NodeId {
            let share = self.share(id).map(|s| s.to_string()).unwrap_or_default();
            w.write_record([
                eco.graph().name(id).as_str(),
                &eco.reach().by_id(id).to_string(),
                &self.delta(id).to_string(),
                &self.raw(id).to_string(),
                &share,
            ])?;
        }
        w.flush().map_err(|e| Error::io("writing impact report", e))?;
        Ok(())
    }
}

/// Raw impact `Δm_p · reach(p)` for every package.
///
/// Deltas on packages without a score are ignored and the package is listed
/// as excluded. Deltas that would move a score outside `[0, 10]` are errors.
pub fn impact(eco: &Ecosystem, scenario: &Scenario) -> Result<ImpactReport> {
    let mut delta = vec![0.0; eco.len()];
    for (name, &d) in &scenario.deltas {
        let id = eco.graph().require_id(name)?;
        let Some(m) = eco.scores()[id as usize] else {
            continue;
        };
        let after = m + d;
        if !d.is_finite()
            || after < -BOUNDS_SLACK
            || after > MAX_MAINTAINED_SCORE + BOUNDS_SLACK
        {
            return Err(Error::domain(format!(
                "delta {d} moves {name} from {m} outside [0, 10]"
            )));
        }
        delta[id as usize] = d;
    }
    let raw: Vec<f64> = delta
        .iter()
        .zip(eco.reach().values())
        .map(|(&d, &r)| d * r as f64)
        .collect();
    let total = raw.iter().copied().collect::<CompensatedSum>().value();
    let excluded = (0..eco.len() as NodeId)
        .filter(|&i| eco.scores()[i as usize].is_none())
        .collect();
    Ok(ImpactReport {
        label: scenario.label.clone(),
        delta,
        raw,
        total,
        shares: None,
        excluded,
    })
}

/// Divides every impact by the scenario total.
///
/// For a negative total (regressions) the shares come out non-negative.
pub fn normalize(mut report: ImpactReport) -> Result<ImpactReport> {
    if report.total == 0.0 || !report.total.is_finite() {
        return Err(Error::DegenerateScenario {
            label: report.label,
        });
    }
    let total = report.total;
    report.shares = Some(
        report
            .raw
            .iter()
            // + 0.0 turns -0.0 into 0.0
            .map(|&e| e / total + 0.0)
            .collect(),
    );
    Ok(report)
}

/// `impact` followed by `normalize`.
pub fn normalized_impact(eco: &Ecosystem, scenario: &Scenario) -> Result<ImpactReport> {
    normalize(impact(eco, scenario)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{build_snapshot, BuildOptions, RawPackageRecord};

    pub(crate) fn eco_from(spec: &[(&str, &[&str], Option<f64>)]) -> Ecosystem {
        let records: Vec<RawPackageRecord> = spec
            .iter()
            .map(|(n, deps, m)| RawPackageRecord {
                name: n.to_string(),
                requirements: deps.iter().map(|d| d.to_string()).collect(),
                maintained_score: *m,
                ..Default::default()
            })
            .collect();
        Ecosystem::new(build_snapshot(&records, BuildOptions::default()).unwrap())
    }

    fn names(eco: &Ecosystem) -> BTreeMap<PackageName, f64> {
        eco.snapshot()
            .packages()
            .values()
            .filter_map(|r| r.maintained_score.map(|m| (r.name.clone(), m)))
            .collect()
    }

    #[test]
    fn state_examples() {
        let eco = eco_from(&[("p", &[], Some(10.0))]);
        assert_eq!(ecosystem_state(&eco, &names(&eco)).unwrap().value, 10.0);

        let eco = eco_from(&[("a", &[], Some(1.0)), ("b", &["a"], Some(1.0)), ("c", &["b"], Some(1.0))]);
        assert_eq!(ecosystem_state(&eco, &names(&eco)).unwrap().value, 6.0);
    }

    #[test]
    fn state_rejects_bad_scores() {
        let eco = eco_from(&[("a", &[], None)]);
        let mut s = BTreeMap::new();
        s.insert(PackageName::new("a").unwrap(), 12.0);
        assert!(matches!(ecosystem_state(&eco, &s), Err(Error::Domain(_))));
        let mut s = BTreeMap::new();
        s.insert(PackageName::new("b").unwrap(), 1.0);
        assert!(matches!(ecosystem_state(&eco, &s), Err(Error::NotFound(_))));
        let state = ecosystem_state(&eco, &BTreeMap::new()).unwrap();
        assert_eq!(state.value, 0.0);
        assert_eq!(state.excluded.len(), 1);
    }

    #[test]
    fn presets() {
        let eco = eco_from(&[("a", &[], Some(10.0)), ("b", &[], Some(0.0)), ("c", &[], Some(3.0)), ("d", &[], None)]);
        let imp = Scenario::improvement(&eco);
        let reg = Scenario::regression(&eco);
        assert_eq!(imp.deltas["a"], 0.0);
        assert_eq!(reg.deltas["b"], 0.0);
        assert_eq!(imp.deltas["c"], 7.0);
        assert_eq!(reg.deltas["c"], -3.0);
        assert!(!imp.deltas.contains_key("d"));
    }

    #[test]
    fn impact_is_delta_times_reach() {
        // a has three dependents -> reach 4
        let eco = eco_from(&[
            ("a", &[], Some(3.0)),
            ("b", &["a"], Some(10.0)),
            ("c", &["a"], Some(10.0)),
            ("d", &["a"], Some(10.0)),
        ]);
        let report = impact(&eco, &Scenario::improvement(&eco)).unwrap();
        let a = eco.graph().id("a").unwrap();
        assert_eq!(report.raw(a), 28.0);
        assert_eq!(report.raw(eco.graph().id("b").unwrap()), 0.0);

        // cross-check: change a's score to 10 and diff the state
        let before = ecosystem_state(&eco, &names(&eco)).unwrap().value;
        let mut after_scores = names(&eco);
        after_scores.insert(PackageName::new("a").unwrap(), 10.0);
        let after = ecosystem_state(&eco, &after_scores).unwrap().value;
        assert_eq!(after - before, 28.0);
    }

    #[test]
    fn unscored_deltas_are_excluded() {
        let eco = eco_from(&[("a", &[], None), ("b", &[], Some(5.0))]);
        let mut s = Scenario::improvement(&eco);
        s.deltas.insert(PackageName::new("a").unwrap(), 4.0);
        let report = impact(&eco, &s).unwrap();
        assert_eq!(report.raw(0), 0.0);
        assert_eq!(report.excluded(), &[0]);
        s.deltas.insert(PackageName::new("ghost").unwrap(), 1.0);
        assert!(matches!(impact(&eco, &s), Err(Error::NotFound(_))));
    }

    #[test]
    fn out_of_bounds_delta() {
        let eco = eco_from(&[("a", &[], Some(5.0))]);
        let mut s = Scenario::improvement(&eco);
        s.deltas.insert(PackageName::new("a").unwrap(), 6.0);
        assert!(matches!(impact(&eco, &s), Err(Error::Domain(_))));
    }

    #[test]
    fn normalization_examples() {
        let eco = eco_from(&[("a", &[], Some(5.0)), ("b", &[], Some(10.0))]);
        let r = normalized_impact(&eco, &Scenario::improvement(&eco)).unwrap();
        assert_eq!(r.shares().unwrap(), &[1.0, 0.0]);

        // E = {30, 10}
        let eco = eco_from(&[("a", &[], Some(0.0)), ("b", &["a"], Some(0.0)), ("c", &["a"], Some(0.0)), ("d", &[], Some(0.0))]);
        let mut s = Scenario::improvement(&eco);
        s.deltas.insert(PackageName::new("b").unwrap(), 0.0);
        s.deltas.insert(PackageName::new("c").unwrap(), 0.0);
        s.deltas.insert(PackageName::new("a").unwrap(), 10.0);
        s.deltas.insert(PackageName::new("d").unwrap(), 10.0);
        let r = normalized_impact(&eco, &s).unwrap();
        assert_eq!(r.raw_values(), &[30.0, 0.0, 0.0, 10.0]);
        assert_eq!(r.shares().unwrap(), &[0.75, 0.0, 0.0, 0.25]);
    }

    #[test]
    fn regression_shares_positive() {
        let eco = eco_from(&[("a", &[], Some(4.0)), ("b", &["a"], Some(2.0)), ("c", &[], Some(0.0))]);
        let r = normalized_impact(&eco, &Scenario::regression(&eco)).unwrap();
        assert!(r.total() < 0.0);
        let shares = r.shares().unwrap();
        assert!(shares.iter().all(|&s| s >= 0.0 && s.is_sign_positive()));
        assert!((shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_total_is_degenerate() {
        let eco = eco_from(&[("a", &[], Some(10.0))]);
        assert!(matches!(
            normalized_impact(&eco, &Scenario::improvement(&eco)),
            Err(Error::DegenerateScenario { .. })
        ));
    }

    #[test]
    fn csv_rows() {
        let eco = eco_from(&[("a", &[], Some(5.0)), ("b", &["a"], None)]);
        let r = normalized_impact(&eco, &Scenario::improvement(&eco)).unwrap();
        let mut out = Vec::new();
        r.write_csv(&eco, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "package,reach,delta,impact,share\na,2,5,10,1\nb,1,0,0,0\n"
        );
    }
}
