use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::{check_unique, ManifestEntry, Split};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    Site,
    Year,
    Severity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SplitOptions {
    /// Permit one site-year pair to appear in several splits.
    pub allow_temporal_overlap: bool,
}

fn stratum_key(e: &ManifestEntry, strata: &[Stratum]) -> Result<Vec<String>> {
    strata
        .iter()
        .map(|s| {
            let missing = |field| Error::MissingStratumField {
                scene_id: e.scene_id.clone(),
                field,
            };
            match s {
                Stratum::Site => e.site.clone().ok_or_else(|| missing("site")),
                Stratum::Year => e.year.map(|y| y.to_string()).ok_or_else(|| missing("year")),
                Stratum::Severity => e
                    .severity
                    .map(|v| format!("{v:?}"))
                    .ok_or_else(|| missing("severity")),
            }
        })
        .collect()
}

/// Integer allocation of `sizes[j]` entries per stratum to the four columns
/// (train, val, test, unassigned) so that row sums are the stratum sizes,
/// column sums are `cols`, and every cell is the floor or ceiling of its
/// proportional quota `sizes[j] * cols[k] / total`.
///
/// Floors are taken first; the leftover units are placed by largest remainder
/// (ties by `priority`), then any shortfall is routed along augmenting paths
/// of a bipartite flow between strata and columns.
fn allocate(
    sizes: &[usize],
    cols: [usize; 4],
    total: usize,
    priority: &[usize],
) -> Vec<[usize; 4]> {
    let rows = sizes.len();
    let mut alloc = vec![[0usize; 4]; rows];
    let mut rem = vec![[0usize; 4]; rows];
    let mut slack = vec![0usize; rows];
    let mut deficit = cols;
    for j in 0..rows {
        for k in 0..4 {
            let prod = sizes[j] * cols[k];
            alloc[j][k] = prod / total;
            rem[j][k] = prod % total;
            deficit[k] -= alloc[j][k];
        }
        slack[j] = sizes[j] - alloc[j].iter().sum::<usize>();
    }
    let mut extra = vec![[false; 4]; rows];

    let mut cells: Vec<(usize, usize)> = (0..rows)
        .flat_map(|j| (0..4).map(move |k| (j, k)))
        .filter(|&(j, k)| rem[j][k] > 0)
        .collect();
    cells.sort_by_key(|&(j, k)| (std::cmp::Reverse(rem[j][k]), priority[j], k));
    for (j, k) in cells {
        if slack[j] > 0 && deficit[k] > 0 {
            extra[j][k] = true;
            slack[j] -= 1;
            deficit[k] -= 1;
        }
    }

    // Strict phase keeps cells within floor/ceil; the relaxed phase is a
    // fallback that only has to guarantee the margins.
    for strict in [true, false] {
        while deficit.iter().any(|&d| d > 0) {
            let Some(path) = augmenting_path(&extra, &rem, &slack, &deficit, strict) else {
                break;
            };
            slack[path[0]] -= 1;
            for w in path.windows(2).step_by(2) {
                extra[w[0]][w[1]] = true;
            }
            for w in path[1..].windows(2).step_by(2) {
                extra[w[1]][w[0]] = false;
            }
            deficit[*path.last().unwrap()] -= 1;
        }
    }
    debug_assert!(deficit.iter().all(|&d| d == 0));

    for j in 0..rows {
        for k in 0..4 {
            alloc[j][k] += usize::from(extra[j][k]);
        }
    }
    alloc
}

/// Alternating path `[row, col, row, col, ...]` from a row with slack to a
/// column with deficit. Row→col steps use free cells, col→row steps undo an
/// existing extra unit.
fn augmenting_path(
    extra: &[[bool; 4]],
    rem: &[[usize; 4]],
    slack: &[usize],
    deficit: &[usize; 4],
    strict: bool,
) -> Option<Vec<usize>> {
    let rows = extra.len();
    // node ids: rows 0..rows, columns rows..rows+4
    let mut prev = vec![usize::MAX; rows + 4];
    let mut seen = vec![false; rows + 4];
    let mut queue = VecDeque::new();
    for j in 0..rows {
        if slack[j] > 0 {
            seen[j] = true;
            queue.push_back(j);
        }
    }
    while let Some(node) = queue.pop_front() {
        if node < rows {
            for k in 0..4 {
                let c = rows + k;
                let usable = !extra[node][k] && (!strict || rem[node][k] > 0);
                if usable && !seen[c] {
                    seen[c] = true;
                    prev[c] = node;
                    if deficit[k] > 0 {
                        let mut path = vec![k];
                        let mut cur = c;
                        while prev[cur] != usize::MAX {
                            cur = prev[cur];
                            path.push(if cur < rows { cur } else { cur - rows });
                        }
                        path.reverse();
                        return Some(path);
                    }
                    queue.push_back(c);
                }
            }
        } else {
            let k = node - rows;
            for j in 0..rows {
                if extra[j][k] && !seen[j] {
                    seen[j] = true;
                    prev[j] = node;
                    queue.push_back(j);
                }
            }
        }
    }
    None
}

/// Assigns train/val/test splits proportionally within each stratum.
///
/// Entries beyond `counts.total()` stay [`Split::Unassigned`]. The result is
/// in input order and depends only on the entries, counts, strata and seed.
pub fn split_manifest(
    entries: &[ManifestEntry],
    counts: SplitCounts,
    strata: &[Stratum],
    seed: u64,
    options: SplitOptions,
) -> Result<Vec<ManifestEntry>> {
    let n = entries.len();
    if counts.total() > n {
        return Err(Error::InsufficientEntries {
            requested: counts.total(),
            available: n,
        });
    }
    check_unique(entries)?;
    let mut out = entries.to_vec();
    if n == 0 {
        return Ok(out);
    }

    let mut groups: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        groups.entry(stratum_key(e, strata)?).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut priority: Vec<usize> = (0..groups.len()).collect();
    priority.shuffle(&mut rng);

    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let cols = [counts.train, counts.val, counts.test, n - counts.total()];
    let alloc = allocate(&sizes, cols, n, &priority);

    for (members, quota) in groups.iter_mut().zip(&alloc) {
        members.sort_by(|&a, &b| entries[a].scene_id.cmp(&entries[b].scene_id));
        members.shuffle(&mut rng);
        let mut it = members.iter();
        for (split, &q) in Split::ALL.iter().zip(quota) {
            for &i in it.by_ref().take(q) {
                out[i].split = *split;
            }
        }
    }

    if !options.allow_temporal_overlap {
        let mut seen: BTreeMap<(&str, i32), BTreeSet<Split>> = BTreeMap::new();
        for e in &out {
            if let (Some(site), Some(year), true) =
                (e.site.as_deref(), e.year, e.split != Split::Unassigned)
            {
                let splits = seen.entry((site, year)).or_default();
                splits.insert(e.split);
                if splits.len() > 1 {
                    return Err(Error::TemporalLeak {
                        site: site.to_string(),
                        year,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Severity;
    use crate::raster::GeoMeta;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn entry(id: String, site: &str, year: i32, severity: Severity) -> ManifestEntry {
        ManifestEntry {
            image_path: format!("{id}.png").into(),
            mask_path: format!("{id}_mask.png").into(),
            scene_id: id,
            geo: GeoMeta::new(
                10.0,
                0.0,
                0.0,
                0.0,
                NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
            )
            .unwrap(),
            site: Some(site.into()),
            year: Some(year),
            severity: Some(severity),
            split: Split::Unassigned,
        }
    }

    fn sizes(out: &[ManifestEntry]) -> [usize; 4] {
        let mut s = [0; 4];
        for e in out {
            s[Split::ALL.iter().position(|x| *x == e.split).unwrap()] += 1;
        }
        s
    }

    fn counts(train: usize, val: usize, test: usize) -> SplitCounts {
        SplitCounts { train, val, test }
    }

    #[test]
    fn exact_sizes_500() {
        let sev = [Severity::Low, Severity::Medium, Severity::High];
        let sites = ["a", "b", "c", "d", "e"];
        let entries: Vec<_> = (0..500)
            .map(|i| {
                entry(
                    format!("s{i:03}"),
                    sites[i % 5],
                    1950 + (i / 5) as i32,
                    sev[i % 3],
                )
            })
            .collect();
        let out = split_manifest(
            &entries,
            counts(250, 50, 200),
            &[Stratum::Site, Stratum::Severity],
            42,
            SplitOptions::default(),
        )
        .unwrap();
        assert_eq!(sizes(&out), [250, 50, 200, 0]);
    }

    #[test]
    fn single_stratum_deterministic() {
        let entries: Vec<_> = (0..10)
            .map(|i| entry(format!("e{i}"), "x", 2000, Severity::Low))
            .collect();
        let opts = SplitOptions {
            allow_temporal_overlap: true,
        };
        let strata = [Stratum::Site, Stratum::Year, Stratum::Severity];
        let a = split_manifest(&entries, counts(5, 2, 3), &strata, 7, opts).unwrap();
        let b = split_manifest(&entries, counts(5, 2, 3), &strata, 7, opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(sizes(&a), [5, 2, 3, 0]);
        // Same site-year across splits without the override.
        assert!(matches!(
            split_manifest(
                &entries,
                counts(5, 2, 3),
                &strata,
                7,
                SplitOptions::default()
            ),
            Err(Error::TemporalLeak { .. })
        ));
    }

    #[test]
    fn two_sites_balanced() {
        let entries: Vec<_> = (0..200)
            .map(|i| {
                let site = if i % 2 == 0 { "north" } else { "south" };
                entry(format!("e{i:03}"), site, 1950 + (i / 2), Severity::Medium)
            })
            .collect();
        let out = split_manifest(
            &entries,
            counts(100, 20, 80),
            &[Stratum::Site],
            3,
            SplitOptions::default(),
        )
        .unwrap();
        for (split, total) in [(Split::Train, 100), (Split::Val, 20), (Split::Test, 80)] {
            let north = out
                .iter()
                .filter(|e| e.split == split && e.site.as_deref() == Some("north"))
                .count();
            assert!((north as i64 - total / 2).abs() <= 1, "{split:?}: {north}");
        }
    }

    #[test]
    fn errors() {
        let entries: Vec<_> = (0..4)
            .map(|i| entry(format!("e{i}"), "a", 2000 + i, Severity::Low))
            .collect();
        assert!(matches!(
            split_manifest(&entries, counts(3, 1, 1), &[], 0, SplitOptions::default()),
            Err(Error::InsufficientEntries {
                requested: 5,
                available: 4
            })
        ));
        let mut missing = entries.clone();
        missing[2].severity = None;
        assert!(matches!(
            split_manifest(
                &missing,
                counts(2, 1, 1),
                &[Stratum::Severity],
                0,
                SplitOptions::default()
            ),
            Err(Error::MissingStratumField {
                field: "severity",
                ..
            })
        ));
    }

    #[test]
    fn allocation_handles_tight_margins() {
        // Many strata of size 1: floors are all zero, every unit comes from remainders.
        let sizes = vec![1usize; 7];
        let alloc = allocate(&sizes, [3, 2, 1, 1], 7, &[0, 1, 2, 3, 4, 5, 6]);
        for row in &alloc {
            assert_eq!(row.iter().sum::<usize>(), 1);
        }
        for k in 0..4 {
            assert_eq!(alloc.iter().map(|r| r[k]).sum::<usize>(), [3, 2, 1, 1][k]);
        }
    }

    proptest! {
        #[test]
        fn partition_and_proportions(
            group_sizes in proptest::collection::vec(1usize..30, 1..8),
            frac in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
            seed in any::<u64>(),
        ) {
            let n: usize = group_sizes.iter().sum();
            let raw = [frac.0, frac.1, frac.2];
            let norm = raw.iter().sum::<f64>().max(1.0);
            let c: Vec<usize> = raw.iter().map(|f| (f / norm * n as f64) as usize).collect();
            let entries: Vec<_> = group_sizes
                .iter()
                .enumerate()
                .flat_map(|(g, &s)| (0..s).map(move |i| (g, i)))
                .map(|(g, i)| entry(format!("g{g}-{i}"), &format!("site{g}"), 1900 + i as i32, Severity::Low))
                .collect();
            let out = split_manifest(&entries, counts(c[0], c[1], c[2]), &[Stratum::Site], seed, SplitOptions::default()).unwrap();
            prop_assert_eq!(&sizes(&out)[..3], &c[..]);
            for (g, &s) in group_sizes.iter().enumerate() {
                let site = format!("site{g}");
                for (k, split) in [Split::Train, Split::Val, Split::Test].iter().enumerate() {
                    let got = out.iter().filter(|e| e.split == *split && e.site.as_deref() == Some(site.as_str())).count() as f64;
                    let quota = s as f64 * c[k] as f64 / n as f64;
                    prop_assert!(got >= quota.floor() && got <= quota.ceil(), "site {} split {:?}: {} vs {}", g, split, got, quota);
                }
            }
            let again = split_manifest(&entries, counts(c[0], c[1], c[2]), &[Stratum::Site], seed, SplitOptions::default()).unwrap();
            prop_assert_eq!(out, again);
        }
    }
}
