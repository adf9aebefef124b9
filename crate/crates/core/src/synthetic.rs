//! Seeded generators for synthetic dumps and datasets with known answers.
//!
//! Used by the test suites and benches; nothing here touches a real model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::classifier::PairFeature;
use crate::dataset::{tokenize, Label, ParaphraseItem, Provenance, SimilarityItem};
use crate::landmark::LandmarkItem;
use crate::store::{
    ContextMode, Dump, DumpHeader, DumpManifest, ManifestEntry, Role, SequenceRecord, TokenSpan,
};

fn gaussian(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn unit(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let v = gaussian(rng, dim);
        let n = norm(&v);
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Unit vector orthogonal to the unit vector `u`.
fn orthogonal_unit(rng: &mut impl Rng, u: &[f64]) -> Vec<f64> {
    loop {
        let mut w = gaussian(rng, u.len());
        let d: f64 = w.iter().zip(u).map(|(a, b)| a * b).sum();
        w.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        let n = norm(&w);
        if n > 1e-6 {
            return w.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Shape of records built by the fixture generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub hidden_dim: usize,
    pub num_layers: usize,
    /// Wrap each phrase in CLS and SEP tokens carrying unrelated vectors.
    pub special_tokens: bool,
}

impl Default for Layout {
    fn default() -> Self {
        Self {
            hidden_dim: 16,
            num_layers: 3,
            special_tokens: true,
        }
    }
}

/// Accumulates records and manifest entries for one dump.
struct DumpBuilder {
    layout: Layout,
    records: Vec<SequenceRecord>,
    entries: Vec<ManifestEntry>,
}

impl DumpBuilder {
    fn new(layout: Layout) -> Self {
        Self {
            layout,
            records: Vec::new(),
            entries: Vec::new(),
        }
    }

    /// Add a record whose phrase tokens average to `centre` at every layer.
    ///
    /// Layer `l` is scaled by `l + 1`, so cosines agree across layers while the
    /// raw vectors differ. Phrase tokens are `centre +- jitter` in pairs.
    fn push_phrase(
        &mut self,
        rng: &mut impl Rng,
        item_id: &str,
        role: Role,
        text: &str,
        centre: &[f64],
    ) -> u64 {
        let d = self.layout.hidden_dim;
        let words = text.split_whitespace().count().max(1);
        let mut tokens: Vec<Vec<f64>> = Vec::new();
        if words == 1 {
            tokens.push(centre.to_vec());
        } else {
            let jitter: Vec<f64> = gaussian(rng, d).into_iter().map(|x| 0.3 * x).collect();
            let plus: Vec<f64> = centre.iter().zip(&jitter).map(|(c, j)| c + j).collect();
            let minus: Vec<f64> = centre.iter().zip(&jitter).map(|(c, j)| c - j).collect();
            tokens.push(plus);
            tokens.push(minus);
        }
        self.push_tokens(rng, item_id, role, text, tokens)
    }

    fn push_tokens(
        &mut self,
        rng: &mut impl Rng,
        item_id: &str,
        role: Role,
        text: &str,
        phrase_tokens: Vec<Vec<f64>>,
    ) -> u64 {
        let d = self.layout.hidden_dim;
        let mut tokens = Vec::new();
        let specials = self.layout.special_tokens;
        if specials {
            tokens.push(gaussian(rng, d));
        }
        let start = tokens.len() as u32;
        tokens.extend(phrase_tokens);
        let end = tokens.len() as u32 - 1;
        if specials {
            tokens.push(gaussian(rng, d));
        }
        let t = tokens.len();
        let mut data = Vec::with_capacity(self.layout.num_layers * t * d);
        for layer in 0..self.layout.num_layers {
            let scale = (layer + 1) as f64;
            for tok in &tokens {
                data.extend(tok.iter().map(|&x| (x * scale) as f32));
            }
        }
        let record_id = self.records.len() as u64;
        self.records.push(SequenceRecord {
            record_id,
            num_tokens: t as u32,
            span_start: start,
            span_end: end,
            cls_pos: if specials { 0 } else { -1 },
            sep_pos: if specials { t as i32 - 1 } else { -1 },
            data,
        });
        self.entries.push(ManifestEntry {
            record_id,
            item_id: item_id.to_string(),
            role,
            phrase_text: text.to_string(),
            context_mode: ContextMode::PhraseOnly,
            head_span: Some(TokenSpan { start: end, end }),
        });
        record_id
    }

    /// Duplicate an existing record's tensor under a new identity.
    fn push_copy(&mut self, of: u64, item_id: &str, role: Role, text: &str) -> u64 {
        let record_id = self.records.len() as u64;
        let mut rec = self.records[of as usize].clone();
        rec.record_id = record_id;
        let mut entry = self.entries[of as usize].clone();
        entry.record_id = record_id;
        entry.item_id = item_id.to_string();
        entry.role = role;
        entry.phrase_text = text.to_string();
        self.records.push(rec);
        self.entries.push(entry);
        record_id
    }

    fn finish(self) -> Dump {
        let header = DumpHeader::new(
            self.layout.hidden_dim as u32,
            self.layout.num_layers as u32,
            self.records.len() as u64,
        );
        Dump::new(header, self.records, DumpManifest::new(self.entries))
            .expect("generator produces consistent dumps")
    }
}

/// One similarity pair with the Avg-Phrase cosine it should have.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSpec {
    pub item: SimilarityItem,
    pub cosine: f64,
}

/// Build a dump where each pair's Avg-Phrase cosine equals its `cosine` at
/// every layer (up to 32-bit rounding).
pub fn similarity_dump(pairs: &[PairSpec], layout: Layout, seed: u64) -> Dump {
    assert!(
        layout.hidden_dim >= 2,
        "need two dimensions to place a pair"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = DumpBuilder::new(layout);
    for p in pairs {
        let c = p.cosine.clamp(-1.0, 1.0);
        let u = unit(&mut rng, layout.hidden_dim);
        let w = orthogonal_unit(&mut rng, &u);
        let s = (1.0 - c * c).max(0.0).sqrt();
        let t: Vec<f64> = u.iter().zip(&w).map(|(a, b)| c * a + s * b).collect();
        let id = &p.item.item_id;
        b.push_phrase(&mut rng, id, Role::Source, &p.item.source.join(" "), &u);
        b.push_phrase(&mut rng, id, Role::Target, &p.item.target.join(" "), &t);
    }
    b.finish()
}

/// Dump and items where Avg-Phrase cosine tracks the score on ordinary
/// pairs but is uncorrelated with it on the reversed-word pairs.
#[derive(Debug, Clone)]
pub struct ContrastFixture {
    pub dump: Dump,
    /// Ordinary pairs followed by reversed-word pairs.
    pub items: Vec<SimilarityItem>,
    pub num_abba: usize,
}

/// Build the correlation contrast fixture.
///
/// Ordinary pairs have scores uniform in [0, 1] and cosine equal to the
/// score. Reversed pairs have scores and cosines in [0.45, 0.55], with the
/// cosines made exactly orthogonal to the centred scores so their sample
/// correlation is zero.
pub fn correlation_contrast(
    num_plain: usize,
    num_abba: usize,
    layout: Layout,
    seed: u64,
) -> ContrastFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x00c0_47a5);
    let mut specs = Vec::with_capacity(num_plain + num_abba);
    for i in 0..num_plain {
        let score: f64 = rng.random_range(0.0..=1.0);
        specs.push(PairSpec {
            item: SimilarityItem {
                item_id: format!("syn-{i:05}"),
                source: tokenize(&format!("alpha{i} beta{i}")),
                target: tokenize(&format!("gamma{i} delta{i}")),
                score,
            },
            cosine: score,
        });
    }
    let scores: Vec<f64> = (0..num_abba)
        .map(|_| rng.random_range(0.45..0.55))
        .collect();
    let mut cosines: Vec<f64> = (0..num_abba)
        .map(|_| rng.random_range(0.45..0.55))
        .collect();
    if num_abba > 1 {
        let n = num_abba as f64;
        let ms = scores.iter().sum::<f64>() / n;
        let mc = cosines.iter().sum::<f64>() / n;
        let cs: Vec<f64> = scores.iter().map(|s| s - ms).collect();
        let dot: f64 = cosines.iter().zip(&cs).map(|(c, s)| (c - mc) * s).sum();
        let ss: f64 = cs.iter().map(|s| s * s).sum();
        for (c, s) in cosines.iter_mut().zip(&cs) {
            *c -= dot / ss * s;
        }
    }
    for (j, (&score, &cosine)) in scores.iter().zip(&cosines).enumerate() {
        let i = num_plain + j;
        specs.push(PairSpec {
            item: SimilarityItem {
                item_id: format!("syn-{i:05}"),
                source: tokenize(&format!("left{j} right{j}")),
                target: tokenize(&format!("right{j} left{j}")),
                score,
            },
            cosine,
        });
    }
    let dump = similarity_dump(&specs, layout, seed);
    ContrastFixture {
        dump,
        items: specs.into_iter().map(|s| s.item).collect(),
        num_abba,
    }
}

/// How landmark fixture vectors are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LandmarkMode {
    /// Each phrase record is an exact copy of its positive landmark's record.
    PhraseEqualsPositive,
    /// Every token of every record carries the same vector.
    Constant,
}

/// Dump with one record per distinct landmark word and one per item phrase.
pub fn landmark_dump(
    items: &[LandmarkItem],
    mode: LandmarkMode,
    layout: Layout,
    seed: u64,
) -> Dump {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = DumpBuilder::new(layout);
    let constant = unit(&mut rng, layout.hidden_dim);
    let mut word_ids = std::collections::BTreeMap::new();
    for item in items {
        for w in [&item.positive, &item.negative] {
            if word_ids.contains_key(w) {
                continue;
            }
            let id = match mode {
                LandmarkMode::PhraseEqualsPositive => {
                    let v = gaussian(&mut rng, layout.hidden_dim);
                    b.push_phrase(&mut rng, w, Role::LandmarkWord, w, &v)
                }
                LandmarkMode::Constant => {
                    push_constant(&mut b, &mut rng, w, Role::LandmarkWord, w, 1, &constant)
                }
            };
            word_ids.insert(w.clone(), id);
        }
    }
    for item in items {
        let text = item.phrase.join(" ");
        match mode {
            LandmarkMode::PhraseEqualsPositive => {
                b.push_copy(
                    word_ids[&item.positive],
                    &item.item_id,
                    Role::LandmarkPhrase,
                    &text,
                );
            }
            LandmarkMode::Constant => {
                let n = item.phrase.len();
                push_constant(
                    &mut b,
                    &mut rng,
                    &item.item_id,
                    Role::LandmarkPhrase,
                    &text,
                    n,
                    &constant,
                );
            }
        }
    }
    b.finish()
}

fn push_constant(
    b: &mut DumpBuilder,
    rng: &mut impl Rng,
    item_id: &str,
    role: Role,
    text: &str,
    words: usize,
    v: &[f64],
) -> u64 {
    let specials = b.layout.special_tokens;
    b.layout.special_tokens = false;
    let extra = if specials { 2 } else { 0 };
    let id = b.push_tokens(rng, item_id, role, text, vec![v.to_vec(); words + extra]);
    b.layout.special_tokens = specials;
    if specials {
        let rec = &mut b.records[id as usize];
        rec.span_start = 1;
        rec.span_end = rec.num_tokens - 2;
        rec.cls_pos = 0;
        rec.sep_pos = rec.num_tokens as i32 - 1;
        b.entries[id as usize].head_span = Some(TokenSpan {
            start: rec.span_end,
            end: rec.span_end,
        });
    }
    id
}

/// How paraphrase fixture vectors relate to labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParaphraseMode {
    /// Every target token carries `+-4` on dimension 0 according to its label.
    LabelDirection,
    /// Independent Gaussian noise; labels carry no signal.
    Noise,
}

/// Balanced paraphrase items (alternating labels) and a matching dump.
pub fn paraphrase_dump(
    num_items: usize,
    mode: ParaphraseMode,
    layout: Layout,
    seed: u64,
) -> (Dump, Vec<ParaphraseItem>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = DumpBuilder::new(layout);
    let d = layout.hidden_dim;
    let mut items = Vec::with_capacity(num_items);
    for i in 0..num_items {
        let label = if i % 2 == 0 {
            Label::Positive
        } else {
            Label::Negative
        };
        let item = ParaphraseItem {
            item_id: format!("para-{i:05}"),
            source: tokenize(&format!("src{i} word{i}")),
            target: tokenize(&format!("trg{i} word{i}")),
            label,
            provenance: match label {
                Label::Positive => Provenance::PpdbPair,
                Label::Negative => Provenance::SampledNegative,
            },
        };
        let src = gaussian(&mut rng, d);
        let src_tokens = vec![src.clone(), gaussian(&mut rng, d)];
        b.push_tokens(
            &mut rng,
            &item.item_id,
            Role::Source,
            &item.source.join(" "),
            src_tokens,
        );
        let mut trg_tokens = vec![gaussian(&mut rng, d), gaussian(&mut rng, d)];
        if mode == ParaphraseMode::LabelDirection {
            let sign = if label == Label::Positive { 4.0 } else { -4.0 };
            for t in &mut trg_tokens {
                t[0] = sign + 0.1 * t[0];
            }
        }
        let id = b.push_tokens(
            &mut rng,
            &item.item_id,
            Role::Target,
            &item.target.join(" "),
            trg_tokens,
        );
        if mode == ParaphraseMode::LabelDirection && layout.special_tokens {
            let rec = &mut b.records[id as usize];
            let t = rec.num_tokens as usize;
            for layer in 0..layout.num_layers {
                let scale = (layer + 1) as f32;
                let sign = if label == Label::Positive { 4.0 } else { -4.0 };
                for tok in [0, t - 1] {
                    rec.data[(layer * t + tok) * d] = sign * scale;
                }
            }
        }
        items.push(item);
    }
    (b.finish(), items)
}

/// Two isotropic Gaussian blobs whose means are `separation` apart along a
/// random direction; labels alternate.
pub fn gaussian_blobs(
    n_per_class: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Vec<PairFeature> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = unit(&mut rng, dim);
    let mut out = Vec::with_capacity(2 * n_per_class);
    for _ in 0..n_per_class {
        for (label, sign) in [(Label::Positive, 0.5), (Label::Negative, -0.5)] {
            let values = gaussian(&mut rng, dim)
                .into_iter()
                .zip(&dir)
                .map(|(x, u)| x + sign * separation * u)
                .collect();
            out.push(PairFeature { values, label });
        }
    }
    out
}

/// Size limits for [`random_dump`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomDumpSpec {
    pub max_hidden_dim: usize,
    pub max_layers: usize,
    pub max_records: usize,
    pub max_tokens: usize,
}

impl Default for RandomDumpSpec {
    fn default() -> Self {
        Self {
            max_hidden_dim: 8,
            max_layers: 4,
            max_records: 6,
            max_tokens: 7,
        }
    }
}

/// A valid dump with random shape, spans, special tokens and payload.
pub fn random_dump(spec: RandomDumpSpec, seed: u64) -> Dump {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=spec.max_hidden_dim);
    let l = rng.random_range(1..=spec.max_layers);
    let n = rng.random_range(0..=spec.max_records);
    let mut records = Vec::with_capacity(n);
    let mut entries = Vec::with_capacity(n);
    let mut next_id: u64 = rng.random_range(0..1000);
    for i in 0..n {
        let t = rng.random_range(1..=spec.max_tokens);
        let a = rng.random_range(0..t);
        let b = rng.random_range(a..t);
        let special = |rng: &mut ChaCha8Rng| {
            if rng.random_bool(0.25) {
                -1
            } else {
                rng.random_range(0..t) as i32
            }
        };
        let cls_pos = special(&mut rng);
        let sep_pos = special(&mut rng);
        let data = (0..l * t * d)
            .map(|_| rng.sample::<f32, _>(StandardNormal) * 3.0)
            .collect();
        let head_span = rng.random_bool(0.7).then(|| {
            let hs = rng.random_range(a..=b) as u32;
            TokenSpan {
                start: hs,
                end: rng.random_range(hs..=b as u32),
            }
        });
        let role = [
            Role::Source,
            Role::Target,
            Role::LandmarkPhrase,
            Role::LandmarkWord,
        ][i % 4];
        records.push(SequenceRecord {
            record_id: next_id,
            num_tokens: t as u32,
            span_start: a as u32,
            span_end: b as u32,
            cls_pos,
            sep_pos,
            data,
        });
        entries.push(ManifestEntry {
            record_id: next_id,
            item_id: format!("rand-{i}"),
            role,
            phrase_text: format!("w{i} v{i}"),
            context_mode: if rng.random_bool(0.5) {
                ContextMode::PhraseOnly
            } else {
                ContextMode::ContextAvailable
            },
            head_span,
        });
        next_id += rng.random_range(1..50);
    }
    let header = DumpHeader::new(d as u32, l as u32, n as u64);
    Dump::new(header, records, DumpManifest::new(entries)).expect("random dumps are consistent")
}
