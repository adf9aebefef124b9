//! Mapping dataset items to dump records through the manifest.

use std::collections::HashMap;

use crate::store::{ContextMode, Dump, Role};

/// Lookup tables over a dump's manifest.
///
/// Items resolve by `(item_id, role)` first, provided the recorded phrase
/// text agrees with the item's. Phrase-only records also
/// resolve by phrase text, since a bare phrase yields the same record
/// whichever item it was extracted for.
pub struct Resolver {
    by_item: HashMap<(String, Role), (u64, String)>,
    phrase_only: HashMap<String, u64>,
    words: HashMap<String, u64>,
    landmark_phrases: HashMap<String, u64>,
}

impl Resolver {
    pub fn new(dump: &Dump) -> Self {
        let mut by_item = HashMap::new();
        let mut phrase_only = HashMap::new();
        let mut words = HashMap::new();
        let mut landmark_phrases = HashMap::new();
        for e in &dump.manifest().entries {
            by_item
                .entry((e.item_id.clone(), e.role))
                .or_insert((e.record_id, normalise(&e.phrase_text)));
            if e.role == Role::LandmarkWord {
                words
                    .entry(normalise(&e.phrase_text))
                    .or_insert(e.record_id);
                continue;
            }
            if e.context_mode != ContextMode::PhraseOnly {
                continue;
            }
            let text = normalise(&e.phrase_text);
            let table = match e.role {
                Role::Source | Role::Target => &mut phrase_only,
                Role::LandmarkPhrase | Role::LandmarkWord => &mut landmark_phrases,
            };
            table.entry(text).or_insert(e.record_id);
        }
        Self {
            by_item,
            phrase_only,
            words,
            landmark_phrases,
        }
    }

    pub fn phrase(&self, item_id: &str, role: Role, text: &str) -> Option<u64> {
        let text = normalise(text);
        if let Some((id, recorded)) = self.by_item.get(&(item_id.to_string(), role)) {
            if *recorded == text {
                return Some(*id);
            }
        }
        match role {
            Role::Source | Role::Target => self.phrase_only.get(&text).copied(),
            Role::LandmarkPhrase => self.landmark_phrases.get(&text).copied(),
            Role::LandmarkWord => self.words.get(&text).copied(),
        }
    }

    /// Landmark words are shared across items, so they resolve by text only.
    pub fn word(&self, text: &str) -> Option<u64> {
        self.words.get(&normalise(text)).copied()
    }

    /// Source and target records of a pair, or the names of whatever is missing.
    pub fn pair(
        &self,
        item_id: &str,
        source: &str,
        target: &str,
    ) -> std::result::Result<(u64, u64), Vec<String>> {
        let s = self.phrase(item_id, Role::Source, source);
        let t = self.phrase(item_id, Role::Target, target);
        match (s, t) {
            (Some(s), Some(t)) => Ok((s, t)),
            _ => {
                let mut missing = Vec::new();
                if s.is_none() {
                    missing.push(format!("{item_id}/source {source:?}"));
                }
                if t.is_none() {
                    missing.push(format!("{item_id}/target {target:?}"));
                }
                Err(missing)
            }
        }
    }
}

fn normalise(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}
