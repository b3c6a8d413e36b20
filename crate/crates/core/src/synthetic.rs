//! Seeded synthetic ecosystems with Zipf-distributed reach.
//!
//! Target reach values are drawn from a Zipf distribution on `1..=n`
//! (`P(k) ∝ k^-exponent`) and then realised exactly. Packages are processed
//! in ascending target order; each one takes already-processed packages as
//! dependents, in random order, until the union of their dependent sets
//! covers exactly `target - 1` packages. A value larger than one plus the
//! number of packages before it is capped there. `pkg000000` has the
//! largest reach. Scores are uniform on [0, 10].

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snapshot::{OwnerKind, OwnerRef, RawPackageRecord, MAX_MAINTAINED_SCORE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub packages: usize,
    pub exponent: f64,
    /// Fraction of packages without a maintained score.
    pub unscored_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            packages: 5_000,
            exponent: 1.5,
            unscored_fraction: 0.0,
            seed: 42,
        }
    }
}

pub fn package_name(i: usize) -> String {
    format!("pkg{i:06}")
}

/// A generated ecosystem and the reach each package was built to have.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEcosystem {
    pub records: Vec<RawPackageRecord>,
    /// Indexed like `records` (name order).
    pub target_reach: Vec<u64>,
}

fn check(config: &SyntheticConfig) -> Result<()> {
    if config.packages == 0 {
        return Err(Error::domain("synthetic ecosystem needs at least one package"));
    }
    if !(config.exponent > 0.0) {
        return Err(Error::domain(format!("exponent {} must be positive", config.exponent)));
    }
    if !(0.0..=1.0).contains(&config.unscored_fraction) {
        return Err(Error::domain("unscored_fraction outside [0, 1]"));
    }
    Ok(())
}

/// Chooses dependents for each package so that its dependent set has
/// exactly the target size. `targets` is ascending; returns, per package,
/// the indices (into `targets`) of its direct dependents.
fn realise(targets: &[usize], rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let n = targets.len();
    // up[i]: i and everything that transitively depends on it
    let mut up: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut dependents = vec![Vec::new(); n];
    let mut stamp = vec![usize::MAX; n];
    let mut order: Vec<usize> = Vec::new();
    for (i, &t) in targets.iter().enumerate() {
        let need = t - 1;
        let mut members: Vec<u32> = vec![i as u32];
        let mut covered = 0;
        if need > 0 {
            order.clear();
            order.extend(0..i);
            order.shuffle(rng);
            for &q in &order {
                if covered == need {
                    break;
                }
                if stamp[q] == i {
                    continue;
                }
                let fresh = up[q].iter().filter(|&&x| stamp[x as usize] != i).count();
                if covered + fresh <= need {
                    for &x in &up[q] {
                        if stamp[x as usize] != i {
                            stamp[x as usize] = i;
                            members.push(x);
                        }
                    }
                    covered += fresh;
                    dependents[i].push(q);
                }
            }
            // The uncovered packages form a down-set; any of its maximal
            // elements adds exactly one, so the fill always completes.
            while covered < need {
                let q = (0..i)
                    .rev()
                    .find(|&q| stamp[q] != i && up[q][1..].iter().all(|&x| stamp[x as usize] == i))
                    .expect("targets are capped by position");
                stamp[q] = i;
                members.push(q as u32);
                covered += 1;
                dependents[i].push(q);
            }
        }
        up.push(members);
    }
    dependents
}

pub fn synthetic_ecosystem(config: &SyntheticConfig) -> Result<SyntheticEcosystem> {
    check(config)?;
    let n = config.packages;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let zipf = Zipf::new(n as f64, config.exponent).map_err(|e| Error::domain(format!("zipf: {e}")))?;
    let mut targets: Vec<usize> = (0..n).map(|_| zipf.sample(&mut rng) as usize).collect();
    targets.sort_unstable();
    for (i, t) in targets.iter_mut().enumerate() {
        *t = (*t).min(i + 1);
    }
    let dependents = realise(&targets, &mut rng);

    // ascending position i becomes name index n - 1 - i
    let name_of = |i: usize| package_name(n - 1 - i);
    let mut requirements: Vec<Vec<String>> = vec![Vec::new(); n];
    for (dep, users) in dependents.iter().enumerate() {
        for &u in users {
            requirements[n - 1 - u].push(name_of(dep));
        }
    }
    let target_reach: Vec<u64> = (0..n).map(|k| targets[n - 1 - k] as u64).collect();

    let owners = (n / 3).max(1);
    let mut records = Vec::with_capacity(n);
    for (k, mut requirements) in requirements.into_iter().enumerate() {
        requirements.sort();
        let scored = !rng.random_bool(config.unscored_fraction);
        let maintained_score = scored.then(|| rng.random_range(0.0..=MAX_MAINTAINED_SCORE));
        let has_repository_link = rng.random_bool(0.9);
        let repository_owner = has_repository_link.then(|| {
            if rng.random_bool(0.7) {
                let id = format!("user{}", rng.random_range(0..owners));
                OwnerRef {
                    owner_id: id.clone(),
                    kind: OwnerKind::Individual,
                    member_ids: [id].into(),
                }
            } else {
                let size = rng.random_range(1..=8);
                OwnerRef {
                    owner_id: format!("org{}", rng.random_range(0..owners)),
                    kind: OwnerKind::Organization,
                    member_ids: (0..size)
                        .map(|_| format!("user{}", rng.random_range(0..owners)))
                        .collect(),
                }
            }
        });
        records.push(RawPackageRecord {
            name: package_name(k),
            requirements,
            maintained_score,
            has_repository_link,
            has_contact_info: rng.random_bool(0.6),
            has_donation_link: rng.random_bool(0.1),
            repository_owner,
            ..Default::default()
        });
    }
    Ok(SyntheticEcosystem { records, target_reach })
}

pub fn synthetic_records(config: &SyntheticConfig) -> Result<Vec<RawPackageRecord>> {
    Ok(synthetic_ecosystem(config)?.records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecosystem::Ecosystem;
    use crate::snapshot::{build_snapshot, BuildOptions};

    fn config(packages: usize, exponent: f64, seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            packages,
            exponent,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn seeded() {
        let c = config(300, 1.5, 42);
        assert_eq!(synthetic_records(&c).unwrap(), synthetic_records(&c).unwrap());
        assert_ne!(synthetic_records(&c).unwrap(), synthetic_records(&config(300, 1.5, 1)).unwrap());
    }

    #[test]
    fn realised_reach_equals_target() {
        for c in [config(2000, 1.5, 42), config(400, 1.0, 3), config(300, 2.5, 9), config(1, 1.5, 0)] {
            let s = synthetic_ecosystem(&c).unwrap();
            let eco = Ecosystem::new(build_snapshot(&s.records, BuildOptions::default()).unwrap());
            assert_eq!(eco.reach().values(), s.target_reach.as_slice());
            assert!(s.target_reach.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn heavy_tail() {
        let s = synthetic_ecosystem(&config(5000, 1.5, 42)).unwrap();
        let leaves = s.target_reach.iter().filter(|&&r| r == 1).count();
        // P(1) = 1 / H(5000, 1.5), about 0.39
        assert!((1700..2200).contains(&leaves), "{leaves}");
        assert!(s.target_reach[0] > 1000);
    }

    #[test]
    fn config_domain() {
        for bad in [config(0, 1.5, 0), config(10, 0.0, 0), SyntheticConfig { unscored_fraction: 1.5, ..Default::default() }] {
            assert!(synthetic_records(&bad).is_err());
        }
    }
}
