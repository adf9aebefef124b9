use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{overlap_counts, phrase_text, Label, ParaphraseItem, Provenance};
use crate::error::{ProbeError, Result};

/// How negatives are drawn from the phrase pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativeSampling {
    /// Any pool phrase that is neither the source nor a known paraphrase.
    Uniform,
    /// Only pool phrases sharing exactly half their words with the source.
    HalfOverlap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSetConfig {
    pub seed: u64,
    pub negatives: NegativeSampling,
    /// Upper bound on emitted pairs (positives + negatives). Whole source
    /// groups are selected in seeded order until the next would overflow.
    pub max_pairs: Option<usize>,
    pub id_prefix: String,
}

impl Default for ClassificationSetConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            negatives: NegativeSampling::Uniform,
            max_pairs: None,
            id_prefix: "ppdb".into(),
        }
    }
}

struct SourceGroup {
    source: Vec<String>,
    targets: Vec<Vec<String>>,
}

fn group_by_source(positives: &[(Vec<String>, Vec<String>)]) -> Vec<SourceGroup> {
    let mut order: Vec<SourceGroup> = Vec::new();
    let mut index: HashMap<&[String], usize> = HashMap::new();
    let mut seen: HashSet<(&[String], &[String])> = HashSet::new();
    for (src, trg) in positives {
        if !seen.insert((src.as_slice(), trg.as_slice())) {
            continue;
        }
        let i = *index.entry(src.as_slice()).or_insert_with(|| {
            order.push(SourceGroup {
                source: src.clone(),
                targets: Vec::new(),
            });
            order.len() - 1
        });
        order[i].targets.push(trg.clone());
    }
    order
}

/// Pool phrases deduplicated in first-seen order, with a word index for
/// overlap-matched sampling.
struct Pool<'a> {
    phrases: Vec<&'a [String]>,
    by_word: HashMap<&'a str, Vec<usize>>,
}

impl<'a> Pool<'a> {
    fn new(pool: &'a [Vec<String>]) -> Self {
        let mut seen = HashSet::new();
        let phrases: Vec<&[String]> = pool
            .iter()
            .filter(|p| !p.is_empty() && seen.insert(p.as_slice()))
            .map(|p| p.as_slice())
            .collect();
        let mut by_word: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, p) in phrases.iter().enumerate() {
            let mut words: Vec<&str> = p.iter().map(String::as_str).collect();
            words.sort_unstable();
            words.dedup();
            for w in words {
                by_word.entry(w).or_default().push(i);
            }
        }
        Self { phrases, by_word }
    }

    fn sample_uniform(
        &self,
        rng: &mut ChaCha8Rng,
        excluded: &HashSet<&[String]>,
        n: usize,
    ) -> Vec<usize> {
        let mut chosen = Vec::with_capacity(n);
        let mut taken = HashSet::new();
        // Rejection sampling first; falls back to enumeration when the pool
        // is mostly excluded.
        let budget = 32 * n + 32;
        for _ in 0..budget {
            if chosen.len() == n || self.phrases.is_empty() {
                break;
            }
            let i = rng.random_range(0..self.phrases.len());
            if !excluded.contains(self.phrases[i]) && taken.insert(i) {
                chosen.push(i);
            }
        }
        if chosen.len() < n {
            let mut rest: Vec<usize> = (0..self.phrases.len())
                .filter(|i| !taken.contains(i) && !excluded.contains(self.phrases[*i]))
                .collect();
            rest.shuffle(rng);
            chosen.extend(rest.into_iter().take(n - chosen.len()));
        }
        chosen
    }

    fn sample_half_overlap(
        &self,
        rng: &mut ChaCha8Rng,
        source: &[String],
        excluded: &HashSet<&[String]>,
        n: usize,
    ) -> Vec<usize> {
        let mut candidates: Vec<usize> = source
            .iter()
            .filter_map(|w| self.by_word.get(w.as_str()))
            .flatten()
            .copied()
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        candidates.retain(|&i| {
            let p = self.phrases[i];
            !excluded.contains(p)
                && matches!(overlap_counts(source, p), Ok((shared, longest)) if 2 * shared == longest)
        });
        if candidates.len() <= n {
            return candidates;
        }
        index::sample(rng, candidates.len(), n)
            .into_iter()
            .map(|k| candidates[k])
            .collect()
    }
}

/// Pair every source phrase's paraphrases with the same number of sampled
/// non-paraphrases.
///
/// A negative is never the source itself nor any of that source's known
/// paraphrases, and never repeats within a source. Output is grouped by
/// source in first-appearance order, positives before negatives, and is a
/// pure function of the inputs and the seed.
pub fn build_classification_set(
    positives: &[(Vec<String>, Vec<String>)],
    pool: &[Vec<String>],
    config: &ClassificationSetConfig,
) -> Result<Vec<ParaphraseItem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut groups = group_by_source(positives);

    if let Some(limit) = config.max_pairs {
        let mut order: Vec<usize> = (0..groups.len()).collect();
        order.shuffle(&mut rng);
        let mut keep = vec![false; groups.len()];
        let mut total = 0;
        for i in order {
            let size = 2 * groups[i].targets.len();
            if total + size <= limit {
                total += size;
                keep[i] = true;
            }
        }
        let mut k = keep.into_iter();
        groups.retain(|_| k.next().unwrap());
    }

    let pool = Pool::new(pool);
    let mut items = Vec::with_capacity(groups.len() * 4);
    let mut next_id = 0usize;
    let mut push =
        |items: &mut Vec<ParaphraseItem>, src: &[String], trg: &[String], label, provenance| {
            next_id += 1;
            items.push(ParaphraseItem {
                item_id: format!("{}-{next_id:07}", config.id_prefix),
                source: src.to_vec(),
                target: trg.to_vec(),
                label,
                provenance,
            });
        };

    for group in &groups {
        let n = group.targets.len();
        let mut excluded: HashSet<&[String]> = group.targets.iter().map(|t| t.as_slice()).collect();
        excluded.insert(group.source.as_slice());
        let chosen = match config.negatives {
            NegativeSampling::Uniform => pool.sample_uniform(&mut rng, &excluded, n),
            NegativeSampling::HalfOverlap => {
                pool.sample_half_overlap(&mut rng, &group.source, &excluded, n)
            }
        };
        if chosen.len() < n {
            return Err(ProbeError::PoolExhausted {
                source_phrase: phrase_text(&group.source),
                needed: n,
                available: chosen.len(),
            });
        }
        for t in &group.targets {
            push(
                &mut items,
                &group.source,
                t,
                Label::Positive,
                Provenance::PpdbPair,
            );
        }
        for &i in &chosen {
            push(
                &mut items,
                &group.source,
                pool.phrases[i],
                Label::Negative,
                Provenance::SampledNegative,
            );
        }
    }
    Ok(items)
}

/// Keep pairs whose word overlap is exactly one half, then rebalance so
/// every surviving source has as many positives as negatives. Surplus items
/// are dropped from the end of each label's item-id order.
pub fn filter_overlap_50(items: &[ParaphraseItem]) -> Vec<ParaphraseItem> {
    let halves: Vec<&ParaphraseItem> = items
        .iter()
        .filter(|it| {
            matches!(overlap_counts(&it.source, &it.target), Ok((shared, longest)) if 2 * shared == longest)
        })
        .collect();

    // Per source: item ids per label, in id order.
    let mut by_source: HashMap<&[String], BTreeMap<Label, Vec<&str>>> = HashMap::new();
    for it in &halves {
        by_source
            .entry(it.source.as_slice())
            .or_default()
            .entry(it.label)
            .or_default()
            .push(it.item_id.as_str());
    }
    let mut keep: HashSet<&str> = HashSet::new();
    for labels in by_source.values_mut() {
        let pos = labels.get(&Label::Positive).map_or(0, Vec::len);
        let neg = labels.get(&Label::Negative).map_or(0, Vec::len);
        let n = pos.min(neg);
        for ids in labels.values_mut() {
            ids.sort_unstable();
            keep.extend(ids.iter().take(n).copied());
        }
    }
    halves
        .into_iter()
        .filter(|it| keep.contains(it.item_id.as_str()))
        .cloned()
        .collect()
}
