//! Batch commands behind the `ecoimpact` binary.
//!
//! Every output file is a pure function of the input snapshot and the run
//! configuration, so reruns are byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ecoimpact_core::analysis::Provenance;
use ecoimpact_core::support::write_strategies_csv;
use ecoimpact_core::{
    analyze, build_snapshot, read_records, AnalysisConfig, BuildOptions, ComparisonReport, Ecosystem,
    EcosystemSnapshot, Error, ErrorKind, FilterStats, Result, StrategyEvaluation, SupportSet,
};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

pub fn exit_code(error: &Error) -> i32 {
    match error.kind() {
        ErrorKind::Input => EXIT_INPUT,
        ErrorKind::Degenerate => EXIT_DEGENERATE,
        ErrorKind::Internal => EXIT_INTERNAL,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub snapshot_path: PathBuf,
    pub analysis: AnalysisConfig,
    /// Only used when `snapshot_path` is raw newline-delimited records.
    pub include_optional: bool,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn new(snapshot_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            snapshot_path: snapshot_path.into(),
            analysis: AnalysisConfig::default(),
            include_optional: true,
            output_dir: output_dir.into(),
        }
    }
}

fn is_raw_records(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("ndjson") | Some("jsonl")
    )
}

/// Loads a snapshot file, or builds one from raw `.ndjson`/`.jsonl` records.
pub fn load_snapshot(path: &Path, include_optional: bool) -> Result<EcosystemSnapshot> {
    if is_raw_records(path) {
        build_snapshot(&read_records(path)?, BuildOptions { include_optional })
    } else {
        EcosystemSnapshot::load(path)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    Ok(BufWriter::new(file))
}

fn finish(mut w: BufWriter<File>, name: &str) -> Result<()> {
    w.flush().map_err(|e| Error::io(format!("writing {name}"), e))
}

fn write_with(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(dir, name)?;
    f(&mut w)?;
    finish(w, name)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    write_with(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n").map_err(|e| Error::io(format!("writing {name}"), e))
    })
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
}

pub fn format_filter_stats(snapshot: &EcosystemSnapshot) -> String {
    let s = snapshot.filter_stats();
    format!(
        "packages: {}\nedges: {}\nscored packages: {}\nrecords read: {}\nunresolvable records: {}\n\
         requirements: {} ({} unparseable)\nunresolved edges: {}\noptional edges skipped: {}\n\
         self edges: {}\nduplicate edges: {}\n",
        snapshot.len(),
        snapshot.edges().len(),
        snapshot.scored_count(),
        s.records_in,
        s.unresolvable_records,
        s.requirements_total,
        s.unparseable_requirements,
        s.unresolved_edges,
        s.optional_edges_skipped,
        s.self_edges,
        s.duplicate_edges,
    )
}

/// Parses raw records and writes a snapshot. Returns the summary printed to stdout.
pub fn cmd_ingest(raw_path: &Path, out_path: &Path, include_optional: bool) -> Result<String> {
    let snapshot = build_snapshot(&read_records(raw_path)?, BuildOptions { include_optional })?;
    if let Some(parent) = out_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        prepare_dir(parent)?;
    }
    snapshot.write(out_path)?;
    Ok(format_filter_stats(&snapshot))
}

#[derive(Serialize)]
struct Manifest<'a> {
    provenance: &'a Provenance,
    packages: usize,
    edges: usize,
    scored_packages: usize,
    filter_stats: &'a FilterStats,
    files: &'a [&'a str],
}

#[derive(Serialize)]
struct WithProvenance<'a, T> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: T,
}

pub const ANALYZE_FILES: [&str; 12] = [
    "reach.csv",
    "impact_improvement.csv",
    "impact_regression.csv",
    "selection_improvement.csv",
    "selection_regression.csv",
    "selection_improvement.json",
    "selection_regression.json",
    "selection_union.txt",
    "pagerank.csv",
    "baseline.json",
    "manifest.json",
    "summary.txt",
];

/// Full analysis of one snapshot. Returns a short human summary.
pub fn cmd_analyze(config: &RunConfig) -> Result<String> {
    let snapshot = load_snapshot(&config.snapshot_path, config.include_optional)?;
    let eco = Ecosystem::new(snapshot);
    let analysis = analyze(&eco, &config.analysis)?;
    let baselines = analysis.baselines(&eco)?;
    let provenance = Provenance::new(&eco, &config.analysis)?;
    let dir = &config.output_dir;
    prepare_dir(dir)?;

    write_with(dir, "reach.csv", |w| eco.reach().write_csv(w))?;
    write_with(dir, "impact_improvement.csv", |w| analysis.improvement.write_csv(&eco, w))?;
    write_with(dir, "impact_regression.csv", |w| analysis.regression.write_csv(&eco, w))?;
    write_with(dir, "selection_improvement.csv", |w| analysis.improvement_selection.write_csv(w))?;
    write_with(dir, "selection_regression.csv", |w| analysis.regression_selection.write_csv(w))?;
    write_json(dir, "selection_improvement.json", &analysis.improvement_selection)?;
    write_json(dir, "selection_regression.json", &analysis.regression_selection)?;
    write_with(dir, "selection_union.txt", |w| {
        for &id in &analysis.union {
            writeln!(w, "{}", eco.graph().name(id)).map_err(|e| Error::io("writing selection_union.txt", e))?;
        }
        Ok(())
    })?;
    write_with(dir, "pagerank.csv", |w| analysis.pagerank.write_csv(eco.graph(), w))?;
    write_json(
        dir,
        "baseline.json",
        &WithProvenance {
            provenance: &provenance,
            body: &baselines,
        },
    )?;
    write_json(
        dir,
        "manifest.json",
        &Manifest {
            provenance: &provenance,
            packages: eco.len(),
            edges: eco.snapshot().edges().len(),
            scored_packages: eco.snapshot().scored_count(),
            filter_stats: eco.snapshot().filter_stats(),
            files: &ANALYZE_FILES,
        },
    )?;

    let pct = |x: f64| format!("{:.2}%", 100.0 * x);
    let mut text = String::new();
    for (label, sel, base) in [
        ("improvement", &analysis.improvement_selection, &baselines.improvement),
        ("regression", &analysis.regression_selection, &baselines.regression),
    ] {
        text.push_str(&format!(
            "{label}: {} packages reach {} (tau {}); union of {} vs random: mean {}, z {:.2}, p {}\n",
            sel.len(),
            pct(sel.achieved_share),
            config.analysis.tau,
            analysis.union.len(),
            pct(base.trial_impacts.mean),
            base.z_score,
            base.p_value,
        ));
    }
    text.push_str(&format!(
        "union: {} packages ({} of the ecosystem)\n",
        analysis.union.len(),
        pct(analysis.union.len() as f64 / eco.len() as f64)
    ));
    if !analysis.pagerank.converged {
        text.push_str(&format!(
            "warning: pagerank stopped after {} iterations (residual {:e})\n",
            analysis.pagerank.iterations_used, analysis.pagerank.residual
        ));
    }
    write_with(dir, "summary.txt", |w| {
        w.write_all(text.as_bytes()).map_err(|e| Error::io("writing summary.txt", e))
    })?;
    Ok(text)
}

#[derive(Serialize)]
struct Rows<'a> {
    rows: &'a [StrategyEvaluation],
}

#[derive(Serialize)]
struct Comparison<'a> {
    comparison: &'a ComparisonReport,
}

/// Scorecards for the impact-driven union and each external list, plus the
/// PageRank comparison at the union's size. Returns the comparison table.
pub fn cmd_compare(config: &RunConfig, set_paths: &[PathBuf]) -> Result<String> {
    let snapshot = load_snapshot(&config.snapshot_path, config.include_optional)?;
    let eco = Ecosystem::new(snapshot);
    let analysis = analyze(&eco, &config.analysis)?;
    let external = set_paths
        .iter()
        .map(|p| SupportSet::load(p, &eco))
        .collect::<Result<Vec<_>>>()?;
    let rows = analysis.strategies(&eco, &external)?;
    let comparison = analysis.comparison(&eco)?;
    let provenance = Provenance::new(&eco, &config.analysis)?;
    let dir = &config.output_dir;
    prepare_dir(dir)?;

    write_with(dir, "strategies.csv", |w| write_strategies_csv(&rows, w))?;
    write_json(
        dir,
        "strategies.json",
        &WithProvenance {
            provenance: &provenance,
            body: Rows { rows: &rows },
        },
    )?;
    write_json(
        dir,
        "comparison.json",
        &WithProvenance {
            provenance: &provenance,
            body: Comparison {
                comparison: &comparison,
            },
        },
    )?;
    let mut table = comparison.to_table();
    for set in &external {
        if !set.unresolved.is_empty() {
            table.push_str(&format!("{}: {} unresolved entries\n", set.label, set.unresolved.len()));
        }
    }
    write_with(dir, "comparison.txt", |w| {
        w.write_all(table.as_bytes()).map_err(|e| Error::io("writing comparison.txt", e))
    })?;
    Ok(table)
}
