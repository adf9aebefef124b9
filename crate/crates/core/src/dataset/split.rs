use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Label, ParaphraseItem};
use crate::error::{ProbeError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub test_fraction: f64,
    /// Keep the label ratio of the test set equal to the overall ratio.
    pub stratify: bool,
    /// Keep every source phrase entirely on one side of the split. The test
    /// size is then approximate.
    pub group_by_source: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            test_fraction: 0.25,
            stratify: true,
            group_by_source: false,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// `floor(x + 0.5)`.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Seeded train/test split.
///
/// The test set has `round_half_up(test_fraction * n)` items. When
/// stratified, per-label test quotas are allotted by largest remainder so
/// the test label ratio tracks the overall ratio to within one item. Both
/// halves keep the input order.
pub fn split_train_test(
    items: &[ParaphraseItem],
    spec: &SplitSpec,
) -> Result<(Vec<ParaphraseItem>, Vec<ParaphraseItem>)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(ProbeError::Config(format!(
            "test_fraction {} must lie strictly between 0 and 1",
            spec.test_fraction
        )));
    }
    if items.len() < 4 {
        return Err(ProbeError::TooFewItems {
            needed: 4,
            got: items.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_test = round_half_up(spec.test_fraction * items.len() as f64);
    let mut in_test = vec![false; items.len()];

    if spec.group_by_source {
        let mut groups: BTreeMap<&[String], Vec<usize>> = BTreeMap::new();
        for (i, it) in items.iter().enumerate() {
            groups.entry(it.source.as_slice()).or_default().push(i);
        }
        let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
        groups.shuffle(&mut rng);
        let mut taken = 0;
        for g in groups {
            if taken >= n_test {
                break;
            }
            // Take the group if it brings the count closer to the target.
            if taken + g.len() <= n_test || (taken + g.len() - n_test) < (n_test - taken) {
                taken += g.len();
                for i in g {
                    in_test[i] = true;
                }
            }
        }
    } else if spec.stratify {
        let mut strata: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
        for (i, it) in items.iter().enumerate() {
            strata.entry(it.label).or_default().push(i);
        }
        let quotas = largest_remainder(&strata.values().map(Vec::len).collect::<Vec<_>>(), n_test);
        for (members, quota) in strata.values_mut().zip(quotas) {
            members.shuffle(&mut rng);
            for &i in &members[..quota] {
                in_test[i] = true;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(&mut rng);
        for &i in &order[..n_test] {
            in_test[i] = true;
        }
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (it, t) in items.iter().zip(in_test) {
        if t {
            test.push(it.clone());
        } else {
            train.push(it.clone());
        }
    }
    Ok((train, test))
}

/// Split `total` across strata proportionally to `sizes`, giving leftover
/// units to the largest fractional parts (earlier strata win ties).
fn largest_remainder(sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| s * total / n).collect();
    let mut rem: Vec<(usize, usize)> = sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| (s * total % n, i))
        .collect();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut left = total - quotas.iter().sum::<usize>();
    for (_, i) in rem {
        if left == 0 {
            break;
        }
        if quotas[i] < sizes[i] {
            quotas[i] += 1;
            left -= 1;
        }
    }
    quotas
}

/// Label counts, for reporting.
#[cfg(test)]
fn label_counts(items: &[ParaphraseItem]) -> std::collections::HashMap<Label, usize> {
    let mut out = std::collections::HashMap::new();
    for it in items {
        *out.entry(it.label).or_default() += 1;
    }
    out
}
