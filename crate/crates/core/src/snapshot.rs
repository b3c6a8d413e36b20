//! Package records and the immutable ecosystem snapshot built from them.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::name::PackageName;
use crate::requirement::{parse_requirement, RequirementSpec};

pub const SNAPSHOT_FORMAT: &str = "ecoimpact-snapshot/1";

pub const MAX_MAINTAINED_SCORE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OwnerKind {
    Individual,
    Organization,
}

/// Repository owner. Individuals carry exactly one member id (themselves).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnerRef {
    pub owner_id: String,
    pub kind: OwnerKind,
    #[serde(default)]
    pub member_ids: BTreeSet<String>,
}

impl OwnerRef {
    fn check(&self) -> std::result::Result<(), String> {
        match self.kind {
            OwnerKind::Individual if self.member_ids.len() != 1 => Err(format!(
                "individual owner {:?} must have exactly one member id, found {}",
                self.owner_id,
                self.member_ids.len()
            )),
            OwnerKind::Organization if self.member_ids.is_empty() => Err(format!(
                "organization owner {:?} has no member ids",
                self.owner_id
            )),
            _ => Ok(()),
        }
    }
}

/// One line of the newline-delimited input, before normalization.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawPackageRecord {
    pub name: String,
    #[serde(default)]
    pub raw_name: Option<String>,
    #[serde(default)]
    pub requirements: Vec<String>,
    #[serde(default)]
    pub maintained_score: Option<f64>,
    #[serde(default)]
    pub has_repository_link: bool,
    #[serde(default)]
    pub has_contact_info: bool,
    #[serde(default)]
    pub has_donation_link: bool,
    #[serde(default)]
    pub repository_owner: Option<OwnerRef>,
    #[serde(default)]
    pub download_count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageRecord {
    pub name: PackageName,
    pub raw_name: String,
    pub requirements: Vec<String>,
    pub maintained_score: Option<f64>,
    pub has_repository_link: bool,
    pub has_contact_info: bool,
    pub has_donation_link: bool,
    pub repository_owner: Option<OwnerRef>,
    pub download_count: Option<u64>,
}

impl PackageRecord {
    fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidRecord {
            name: self.raw_name.clone(),
            reason,
        };
        if let Some(m) = self.maintained_score {
            if !(0.0..=MAX_MAINTAINED_SCORE).contains(&m) {
                return Err(invalid(format!("maintained_score {m} outside [0, 10]")));
            }
        }
        if let Some(owner) = &self.repository_owner {
            if !self.has_repository_link {
                return Err(invalid(
                    "repository_owner is set but has_repository_link is false".into(),
                ));
            }
            owner.check().map_err(invalid)?;
        }
        Ok(())
    }
}

/// Counts of what `build_snapshot` dropped, per rule.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub records_in: usize,
    pub unresolvable_records: usize,
    pub requirements_total: usize,
    pub unparseable_requirements: usize,
    /// Parsed requirements; equals retained edges plus every edge-level drop.
    pub resolvable_requirements: usize,
    pub unresolved_edges: usize,
    pub optional_edges_skipped: usize,
    pub self_edges: usize,
    pub duplicate_edges: usize,
    pub retained_edges: usize,
}

impl FilterStats {
    pub fn dropped_edges(&self) -> usize {
        self.unresolved_edges + self.optional_edges_skipped + self.self_edges + self.duplicate_edges
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// Keep requirements gated on an extra.
    pub include_optional: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            include_optional: true,
        }
    }
}

/// Packages, dependency edges (dependent, dependency) and filtering counts.
///
/// Packages are ordered by name and edges are sorted; every edge endpoint is a
/// package and there are no self or duplicate edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EcosystemSnapshot {
    packages: BTreeMap<PackageName, PackageRecord>,
    edges: Vec<(PackageName, PackageName)>,
    filter_stats: FilterStats,
}

#[derive(Serialize)]
struct SnapshotFileRef<'a> {
    format: &'a str,
    packages: Vec<&'a PackageRecord>,
    edges: &'a [(PackageName, PackageName)],
    filter_stats: &'a FilterStats,
}

#[derive(Deserialize)]
struct SnapshotFile {
    format: String,
    packages: Vec<PackageRecord>,
    edges: Vec<(PackageName, PackageName)>,
    filter_stats: FilterStats,
}

impl EcosystemSnapshot {
    pub fn packages(&self) -> &BTreeMap<PackageName, PackageRecord> {
        &self.packages
    }

    pub fn edges(&self) -> &[(PackageName, PackageName)] {
        &self.edges
    }

    pub fn filter_stats(&self) -> &FilterStats {
        &self.filter_stats
    }

    pub fn len(&self) -> usize {
        self.packages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packages.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&PackageRecord> {
        self.packages.get(name)
    }

    pub fn scored_count(&self) -> usize {
        self.packages
            .values()
            .filter(|r| r.maintained_score.is_some())
            .count()
    }

    /// Assembles a snapshot from already-filtered parts, checking every invariant.
    pub fn from_parts(
        packages: Vec<PackageRecord>,
        mut edges: Vec<(PackageName, PackageName)>,
        filter_stats: FilterStats,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for record in packages {
            record.validate()?;
            if let Some(prev) = map.insert(record.name.clone(), record) {
                return Err(Error::NameCollision {
                    normalized: prev.name.to_string(),
                    raw_names: vec![prev.raw_name.clone(), map[&prev.name].raw_name.clone()],
                });
            }
        }
        edges.sort();
        for window in edges.windows(2) {
            if window[0] == window[1] {
                return Err(Error::domain(format!(
                    "duplicate edge {} -> {}",
                    window[0].0, window[0].1
                )));
            }
        }
        for (from, to) in &edges {
            if from == to {
                return Err(Error::domain(format!("self edge on {from}")));
            }
            for end in [from, to] {
                if !map.contains_key(end) {
                    return Err(Error::domain(format!(
                        "edge {from} -> {to} references unknown package {end}"
                    )));
                }
            }
        }
        Ok(EcosystemSnapshot {
            packages: map,
            edges,
            filter_stats,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SnapshotFileRef {
            format: SNAPSHOT_FORMAT,
            packages: self.packages.values().collect(),
            edges: &self.edges,
            filter_stats: &self.filter_stats,
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SnapshotFile = serde_json::from_str(text)?;
        if file.format != SNAPSHOT_FORMAT {
            return Err(Error::Format {
                found: file.format,
                expected: SNAPSHOT_FORMAT,
            });
        }
        Self::from_parts(file.packages, file.edges, file.filter_stats)
    }

    /// Hex SHA-256 of the serialized snapshot.
    pub fn content_hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_json()?.as_bytes())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut file = File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        file.write_all(self.to_json()?.as_bytes())
            .and_then(|_| file.write_all(b"\n"))
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }
}

/// Reads one record per non-blank line. Unknown fields are ignored.
pub fn read_records(path: &Path) -> Result<Vec<RawPackageRecord>> {
    let file =
        File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    read_records_from(BufReader::new(file), path)
}

pub fn read_records_from<R: BufRead>(reader: R, path: &Path) -> Result<Vec<RawPackageRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

struct Parsed {
    record: PackageRecord,
    requirements: Vec<Option<RequirementSpec>>,
}

/// Normalizes records, resolves their requirements against the package list
/// and assembles the snapshot.
///
/// Requirement targets without a package entry are dropped first; records
/// whose own name cannot be normalized are dropped next. Extra-gated
/// requirements are skipped unless `include_optional` is set. Two records
/// normalizing to the same name are an error.
pub fn build_snapshot(
    records: &[RawPackageRecord],
    options: BuildOptions,
) -> Result<EcosystemSnapshot> {
    let parsed: Vec<Option<Parsed>> = records
        .par_iter()
        .map(|raw| {
            let name = PackageName::new(&raw.name).ok()?;
            let requirements = raw
                .requirements
                .iter()
                .map(|spec| parse_requirement(spec).ok())
                .collect();
            let record = PackageRecord {
                name,
                raw_name: raw.raw_name.clone().unwrap_or_else(|| raw.name.clone()),
                requirements: raw.requirements.clone(),
                maintained_score: raw.maintained_score,
                has_repository_link: raw.has_repository_link,
                has_contact_info: raw.has_contact_info,
                has_donation_link: raw.has_donation_link,
                repository_owner: raw.repository_owner.clone(),
                download_count: raw.download_count,
            };
            Some(Parsed {
                record,
                requirements,
            })
        })
        .collect();

    let mut stats = FilterStats {
        records_in: records.len(),
        ..FilterStats::default()
    };

    let mut by_name: BTreeMap<PackageName, Vec<&Parsed>> = BTreeMap::new();
    for p in parsed.iter() {
        match p {
            Some(p) => by_name.entry(p.record.name.clone()).or_default().push(p),
            None => stats.unresolvable_records += 1,
        }
    }
    if let Some((name, group)) = by_name.iter().find(|(_, g)| g.len() > 1) {
        let mut raw_names: Vec<String> = group.iter().map(|p| p.record.raw_name.clone()).collect();
        raw_names.sort();
        return Err(Error::NameCollision {
            normalized: name.to_string(),
            raw_names,
        });
    }

    let mut edges = BTreeSet::new();
    for (name, group) in &by_name {
        let p = group[0];
        p.record.validate()?;
        stats.requirements_total += p.requirements.len();
        for req in &p.requirements {
            let Some(req) = req else {
                stats.unparseable_requirements += 1;
                continue;
            };
            stats.resolvable_requirements += 1;
            if !by_name.contains_key(&req.target_name) {
                stats.unresolved_edges += 1;
            } else if req.is_optional && !options.include_optional {
                stats.optional_edges_skipped += 1;
            } else if &req.target_name == name {
                stats.self_edges += 1;
            } else if !edges.insert((name.clone(), req.target_name.clone())) {
                stats.duplicate_edges += 1;
            }
        }
    }
    stats.retained_edges = edges.len();

    let packages = by_name.into_values().map(|g| g[0].record.clone()).collect();
    EcosystemSnapshot::from_parts(packages, edges.into_iter().collect(), stats)
}
