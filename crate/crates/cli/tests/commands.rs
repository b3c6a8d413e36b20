use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;

use ecoimpact_cli::{cmd_analyze, cmd_compare, cmd_ingest, RunConfig, ANALYZE_FILES};
use ecoimpact_core::synthetic::{synthetic_records, SyntheticConfig};
use ecoimpact_core::{AnalysisConfig, EcosystemSnapshot, RawPackageRecord};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn chain5() -> PathBuf {
    fixtures().join("chain5.ndjson")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ecoimpact"))
}

fn write_records(path: &Path, records: &[RawPackageRecord]) {
    let text: String = records.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
    std::fs::write(path, text).unwrap();
}

#[test]
fn analyze_matches_golden_files_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::new(chain5(), dir.path().join("a"));
    cmd_analyze(&config).unwrap();
    for name in ANALYZE_FILES {
        let golden = read(&fixtures().join("golden/analyze").join(name));
        assert_eq!(read(&dir.path().join("a").join(name)), golden, "{name}");
    }
    let again = RunConfig::new(chain5(), dir.path().join("b"));
    cmd_analyze(&again).unwrap();
    for name in ANALYZE_FILES {
        assert_eq!(read(&dir.path().join("a").join(name)), read(&dir.path().join("b").join(name)));
    }
}

/// The golden files agree with values worked out by hand for the chain
/// base <- parser <- httpkit <- webapp-sdk <- cli-tool, scores 2, 5, 9, 1, 10.
#[test]
fn golden_files_agree_with_hand_computation() {
    let golden = fixtures().join("golden/analyze");
    let rows = |name: &str| -> Vec<Vec<String>> {
        read(&golden.join(name))
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect()
    };
    let reach: BTreeMap<String, u64> = rows("reach.csv").into_iter().map(|r| (r[0].clone(), r[1].parse().unwrap())).collect();
    let expected_reach = [("base", 5), ("parser", 4), ("httpkit", 3), ("webapp-sdk", 2), ("cli-tool", 1)];
    for (p, r) in expected_reach {
        assert_eq!(reach[p], r);
    }
    // improvement: (10 - m) * reach = 40, 20, 3, 18, 0; total 81
    let imp: BTreeMap<String, (f64, f64)> = rows("impact_improvement.csv")
        .into_iter()
        .map(|r| (r[0].clone(), (r[3].parse().unwrap(), r[4].parse().unwrap())))
        .collect();
    for (p, e) in [("base", 40.0), ("parser", 20.0), ("httpkit", 3.0), ("webapp-sdk", 18.0), ("cli-tool", 0.0)] {
        assert_eq!(imp[p], (e, e / 81.0), "{p}");
    }
    // regression: -m * reach = -10, -20, -27, -2, -10; total -69
    let reg: BTreeMap<String, (f64, f64)> = rows("impact_regression.csv")
        .into_iter()
        .map(|r| (r[0].clone(), (r[3].parse().unwrap(), r[4].parse().unwrap())))
        .collect();
    for (p, e) in [("base", -10.0), ("parser", -20.0), ("httpkit", -27.0), ("webapp-sdk", -2.0), ("cli-tool", -10.0)] {
        assert_eq!(reg[p], (e, e / -69.0), "{p}");
    }
    // 40/81 < 0.8, 60/81 < 0.8, 78/81 >= 0.8
    let sel: Vec<String> = rows("selection_improvement.csv").into_iter().map(|r| r[1].clone()).collect();
    assert_eq!(sel, ["base", "parser", "webapp-sdk"]);
    // 27/69, 47/69 < 0.8, 57/69 >= 0.8; base precedes cli-tool on the tie
    let sel: Vec<String> = rows("selection_regression.csv").into_iter().map(|r| r[1].clone()).collect();
    assert_eq!(sel, ["httpkit", "parser", "base"]);
    assert_eq!(read(&golden.join("selection_union.txt")), "base\nhttpkit\nparser\nwebapp-sdk\n");

    // Four of five scored packages: the five possible draws are equally
    // likely, so the trial mean sits near 4/5 and about a fifth of trials
    // draw the union itself.
    let baseline: serde_json::Value = serde_json::from_str(&read(&golden.join("baseline.json"))).unwrap();
    let imp_base = &baseline["improvement"];
    assert_eq!(imp_base["observed_impact"], 1.0);
    assert!((imp_base["trial_impacts"]["mean"].as_f64().unwrap() - 0.8).abs() < 0.01);
    let exceed = imp_base["exceed_count"].as_u64().unwrap();
    assert!((1800..2200).contains(&exceed), "{exceed}");
}

#[test]
fn full_threshold_lists_every_nonzero_share() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::new(chain5(), dir.path());
    config.analysis = AnalysisConfig {
        tau: 1.0,
        n_trials: 50,
        ..Default::default()
    };
    cmd_analyze(&config).unwrap();
    let names: BTreeSet<String> = read(&dir.path().join("selection_improvement.csv"))
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect();
    let expected: BTreeSet<String> = ["base", "parser", "httpkit", "webapp-sdk"].map(String::from).into();
    assert_eq!(names, expected);
}

#[test]
fn ingest_writes_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("snap/chain5.json");
    let status = bin().arg("ingest").arg(chain5()).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let snapshot = EcosystemSnapshot::load(&out).unwrap();
    assert_eq!((snapshot.len(), snapshot.edges().len()), (5, 4));

    // analysing the stored snapshot equals analysing the raw records
    cmd_analyze(&RunConfig::new(&out, dir.path().join("from-snapshot"))).unwrap();
    assert_eq!(
        read(&dir.path().join("from-snapshot/impact_improvement.csv")),
        read(&fixtures().join("golden/analyze/impact_improvement.csv"))
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let collide = dir.path().join("collide.ndjson");
    std::fs::write(&collide, "{\"name\": \"Foo.Bar\"}\n{\"name\": \"foo_bar\"}\n").unwrap();
    let out = bin().arg("ingest").arg(&collide).arg("--out").arg(dir.path().join("x.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("foo-bar"));

    let saturated = dir.path().join("saturated.ndjson");
    std::fs::write(&saturated, "{\"name\": \"a\", \"maintained_score\": 10}\n{\"name\": \"b\", \"requirements\": [\"a\"], \"maintained_score\": 10}\n").unwrap();
    let status = bin().arg("analyze").arg(&saturated).arg("--out").arg(dir.path().join("o")).status().unwrap();
    assert_eq!(status.code(), Some(3));

    let status = bin()
        .args(["compare"])
        .arg(chain5())
        .arg(dir.path().join("missing.txt"))
        .arg("--out")
        .arg(dir.path().join("c"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = bin().arg("analyze").arg(chain5()).args(["--tau", "1.5", "--out"]).arg(dir.path().join("t")).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn optional_toggle() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("opt.ndjson");
    std::fs::write(&raw, "{\"name\": \"a\", \"requirements\": [\"b ; extra == 'dev'\"]}\n{\"name\": \"b\"}\n").unwrap();
    let with = cmd_ingest(&raw, &dir.path().join("with.json"), true).unwrap();
    let without = cmd_ingest(&raw, &dir.path().join("without.json"), false).unwrap();
    assert!(with.contains("edges: 1\n"));
    assert!(without.contains("edges: 0\n") && without.contains("optional edges skipped: 1"));
    let status = bin().arg("ingest").arg(&raw).arg("--no-optional").arg("--out").arg(dir.path().join("n.json")).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(EcosystemSnapshot::load(&dir.path().join("n.json")).unwrap().edges().len(), 0);
}

#[test]
fn ingest_summary_matches_recount() {
    let dir = tempfile::tempdir().unwrap();
    let mut records = synthetic_records(&SyntheticConfig {
        packages: 10_000,
        seed: 7,
        ..Default::default()
    })
    .unwrap();
    // sprinkle references to packages that do not exist
    for (i, r) in records.iter_mut().enumerate().filter(|(i, _)| i % 17 == 0) {
        r.requirements.push(format!("ghost{i}>=1"));
    }
    let raw = dir.path().join("corpus.ndjson");
    write_records(&raw, &records);
    let summary = cmd_ingest(&raw, &dir.path().join("s.json"), true).unwrap();

    let known: BTreeSet<&str> = records.iter().map(|r| r.name.as_str()).collect();
    let mut pairs = BTreeSet::new();
    let mut unresolved = 0;
    for r in &records {
        for req in &r.requirements {
            let target = req.split(">=").next().unwrap();
            if known.contains(target) {
                pairs.insert((r.name.as_str(), target));
            } else {
                unresolved += 1;
            }
        }
    }
    let scored = records.iter().filter(|r| r.maintained_score.is_some()).count();
    assert!(summary.contains(&format!("packages: 10000\nedges: {}\nscored packages: {scored}\n", pairs.len())));
    assert!(summary.contains(&format!("unresolved edges: {unresolved}\n")));
}

#[test]
fn compare_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::new(chain5(), dir.path());
    let sets = [fixtures().join("sponsors.txt"), fixtures().join("lifted.txt")];
    cmd_compare(&config, &sets).unwrap();
    for name in ["strategies.csv", "strategies.json", "comparison.json", "comparison.txt"] {
        assert_eq!(read(&dir.path().join(name)), read(&fixtures().join("golden/compare").join(name)), "{name}");
    }
}

#[test]
fn compare_without_sets_and_with_the_union() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::new(chain5(), dir.path().join("none"));
    cmd_compare(&config, &[]).unwrap();
    assert_eq!(read(&dir.path().join("none/strategies.csv")).lines().count(), 2);

    let union = fixtures().join("golden/analyze/selection_union.txt");
    let config = RunConfig::new(chain5(), dir.path().join("same"));
    cmd_compare(&config, &[union]).unwrap();
    let text = read(&dir.path().join("same/strategies.csv"));
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0][4..6], rows[1][4..6]);
}

/// Three mechanism files on a synthetic ecosystem, with each row recomputed
/// directly from the raw records.
#[test]
fn compare_rows_match_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let records = synthetic_records(&SyntheticConfig {
        packages: 400,
        unscored_fraction: 0.1,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let raw = dir.path().join("eco.ndjson");
    write_records(&raw, &records);

    // reach by reverse BFS over the raw requirement lists
    let index: BTreeMap<&str, usize> = records.iter().enumerate().map(|(i, r)| (r.name.as_str(), i)).collect();
    let mut dependents = vec![Vec::new(); records.len()];
    for (i, r) in records.iter().enumerate() {
        for d in &r.requirements {
            dependents[index[d.as_str()]].push(i);
        }
    }
    let reach: Vec<f64> = (0..records.len())
        .map(|p| {
            let mut seen = BTreeSet::from([p]);
            let mut stack = vec![p];
            while let Some(u) = stack.pop() {
                for &v in &dependents[u] {
                    if seen.insert(v) {
                        stack.push(v);
                    }
                }
            }
            seen.len() as f64
        })
        .collect();
    let imp = |i: usize| records[i].maintained_score.map_or(0.0, |m| (10.0 - m) * reach[i]);
    let reg = |i: usize| records[i].maintained_score.map_or(0.0, |m| -m * reach[i]);
    let imp_total: f64 = (0..records.len()).map(imp).sum();
    let reg_total: f64 = (0..records.len()).map(reg).sum();

    let mut paths = Vec::new();
    let mut members = Vec::new();
    for (k, step) in [3usize, 7, 11].into_iter().enumerate() {
        let set: Vec<usize> = (k..records.len()).step_by(step).collect();
        let path = dir.path().join(format!("mechanism{k}.txt"));
        let text: String = set.iter().map(|&i| records[i].name.to_uppercase() + "\n").collect();
        std::fs::write(&path, text + "not-a-package\n").unwrap();
        paths.push(path);
        members.push(set);
    }
    let mut config = RunConfig::new(&raw, dir.path().join("out"));
    config.analysis.n_trials = 10;
    cmd_compare(&config, &paths).unwrap();

    let json: serde_json::Value = serde_json::from_str(&read(&dir.path().join("out/strategies.json"))).unwrap();
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for (row, set) in rows[1..].iter().zip(&members) {
        let f = |k: &str| row[k].as_f64().unwrap();
        let u = |k: &str| row[k].as_u64().unwrap() as usize;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        assert_eq!(u("package_count"), set.len());
        assert_eq!(u("unresolved_count"), 1);
        assert!(close(f("improvement_share"), set.iter().map(|&i| imp(i)).sum::<f64>() / imp_total));
        assert!(close(f("regression_share"), set.iter().map(|&i| reg(i)).sum::<f64>() / reg_total));
        let owners: Vec<_> = set.iter().filter_map(|&i| records[i].repository_owner.as_ref()).collect();
        assert_eq!(u("total_individuals"), owners.iter().map(|o| o.member_ids.len()).sum::<usize>());
        let distinct: BTreeSet<&String> = owners.iter().flat_map(|o| o.member_ids.iter()).collect();
        assert_eq!(u("distinct_maintainers"), distinct.len());
        assert_eq!(u("contact_count"), set.iter().filter(|&&i| records[i].has_contact_info).count());
        assert_eq!(u("donation_count"), set.iter().filter(|&&i| records[i].has_donation_link).count());
        assert_eq!(u("excluded_no_repo"), set.iter().filter(|&&i| !records[i].has_repository_link).count());
    }
}
