use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_lines, tokenize};
use crate::error::{ProbeError, Result};

/// Why a raw paraphrase pair was discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Hyperlink,
    NonAlphabetic,
    Identical,
    Tense,
    Abbreviation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CleanedPpdb {
    pub pairs: Vec<(Vec<String>, Vec<String>)>,
    pub dropped: BTreeMap<DropReason, usize>,
}

impl CleanedPpdb {
    pub fn dropped_total(&self) -> usize {
        self.dropped.values().sum()
    }
}

/// Split one PPDB row into its phrase and paraphrase.
///
/// Accepts the native ` ||| `-delimited rows
/// (`LHS ||| PHRASE ||| PARAPHRASE ||| FEATURES ...`) and plain
/// tab-separated `source<TAB>target` rows.
pub fn parse_ppdb_line(line: &str) -> Option<(String, String)> {
    if line.contains("|||") {
        let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
        if fields.len() >= 3 {
            return Some((fields[1].to_string(), fields[2].to_string()));
        }
        return None;
    }
    let mut parts = line.split('\t');
    match (parts.next(), parts.next()) {
        (Some(s), Some(t)) if !s.trim().is_empty() && !t.trim().is_empty() => {
            Some((s.trim().to_string(), t.trim().to_string()))
        }
        _ => None,
    }
}

pub fn load_ppdb(path: &Path) -> Result<Vec<(String, String)>> {
    let lines = read_lines(path)?;
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let pair = parse_ppdb_line(line).ok_or_else(|| ProbeError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: "expected `LHS ||| phrase ||| paraphrase ...` or `source<TAB>target`".into(),
        })?;
        out.push(pair);
    }
    Ok(out)
}

/// One phrase per line, lowercased and tokenised; blank lines skipped.
pub fn load_phrase_pool(path: &Path) -> Result<Vec<Vec<String>>> {
    Ok(read_lines(path)?
        .iter()
        .map(|l| tokenize(l))
        .filter(|p| !p.is_empty())
        .collect())
}

fn is_hyperlink(text: &str) -> bool {
    const TLDS: [&str; 8] = [
        ".com", ".org", ".net", ".edu", ".gov", ".html", ".htm", ".php",
    ];
    let lower = text.to_lowercase();
    lower.contains("://")
        || lower.contains("www.")
        || lower.starts_with("http")
        || lower.contains(" http")
        || lower
            .split_whitespace()
            .any(|tok| TLDS.iter().any(|t| tok.contains(t) && tok.len() > t.len()))
}

fn has_non_alphabetic(text: &str) -> bool {
    text.chars().any(|c| !(c.is_alphabetic() || c == ' '))
}

/// Remove one of the suffixes -ing, -ed, -s, keeping a stem of at least two
/// characters.
pub fn strip_tense(word: &str) -> &str {
    for suffix in ["ing", "ed"] {
        if let Some(stem) = word.strip_suffix(suffix) {
            if stem.chars().count() >= 2 {
                return stem;
            }
        }
    }
    if let Some(stem) = word.strip_suffix('s') {
        if !stem.ends_with('s') && stem.chars().count() >= 2 {
            return stem;
        }
    }
    word
}

fn is_tense_variant(a: &[String], b: &[String]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| strip_tense(x) == strip_tense(y))
}

fn initials(words: &[String]) -> String {
    words.iter().filter_map(|w| w.chars().next()).collect()
}

/// One phrase is the initials of the other, or each of its words is a
/// prefix of the corresponding word of the other.
fn is_abbreviation(a: &[String], b: &[String]) -> bool {
    let (short, long) = if a.concat().len() <= b.concat().len() {
        (a, b)
    } else {
        (b, a)
    };
    if short.len() == 1 && long.len() >= 2 && short[0] == initials(long) {
        return true;
    }
    short.len() == long.len()
        && short != long
        && short
            .iter()
            .zip(long)
            .all(|(s, l)| !s.is_empty() && l.starts_with(s.as_str()))
}

/// The rule that discards a pair, checked in the order hyperlink,
/// non-alphabetic, identical, tense, abbreviation.
pub fn classify_pair(source: &str, target: &str) -> Option<DropReason> {
    if is_hyperlink(source) || is_hyperlink(target) {
        return Some(DropReason::Hyperlink);
    }
    if has_non_alphabetic(source) || has_non_alphabetic(target) {
        return Some(DropReason::NonAlphabetic);
    }
    let (s, t) = (tokenize(source), tokenize(target));
    if s == t {
        return Some(DropReason::Identical);
    }
    if is_tense_variant(&s, &t) {
        return Some(DropReason::Tense);
    }
    if is_abbreviation(&s, &t) {
        return Some(DropReason::Abbreviation);
    }
    None
}

/// Apply the cleanup heuristics, dropping duplicate pairs and counting drops
/// per reason.
pub fn clean_ppdb(raw: &[(String, String)]) -> CleanedPpdb {
    let mut out = CleanedPpdb::default();
    let mut seen = HashSet::new();
    for (src, trg) in raw {
        if let Some(reason) = classify_pair(src, trg) {
            *out.dropped.entry(reason).or_default() += 1;
            continue;
        }
        let pair = (tokenize(src), tokenize(trg));
        if pair.0.is_empty() || pair.1.is_empty() {
            continue;
        }
        if seen.insert(pair.clone()) {
            out.pairs.push(pair);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drop_reasons() {
        assert_eq!(
            classify_pair("run fast", "http://x.com"),
            Some(DropReason::Hyperlink)
        );
        assert_eq!(
            classify_pair("see www.example.com", "site"),
            Some(DropReason::Hyperlink)
        );
        assert_eq!(
            classify_pair("united nations", "un"),
            Some(DropReason::Abbreviation)
        );
        assert_eq!(
            classify_pair("un", "United Nations"),
            Some(DropReason::Abbreviation)
        );
        assert_eq!(
            classify_pair("gov policy", "government policy"),
            Some(DropReason::Abbreviation)
        );
        assert_eq!(
            classify_pair("walked home", "walking home"),
            Some(DropReason::Tense)
        );
        assert_eq!(
            classify_pair("runs fast", "run fast"),
            Some(DropReason::Tense)
        );
        assert_eq!(
            classify_pair("it's fine", "it is fine"),
            Some(DropReason::NonAlphabetic)
        );
        assert_eq!(
            classify_pair("3 cats", "three cats"),
            Some(DropReason::NonAlphabetic)
        );
        assert_eq!(
            classify_pair("Law School", "law school"),
            Some(DropReason::Identical)
        );
        assert_eq!(classify_pair("are crucial", "is absolutely vital"), None);
        assert_eq!(
            classify_pair(
                "communication infrastructure",
                "telecommunications infrastructure"
            ),
            None
        );
    }

    #[test]
    fn suffix_stripping() {
        assert_eq!(strip_tense("walked"), "walk");
        assert_eq!(strip_tense("walking"), "walk");
        assert_eq!(strip_tense("walks"), "walk");
        assert_eq!(strip_tense("class"), "class");
        assert_eq!(strip_tense("is"), "is");
        assert_eq!(strip_tense("red"), "red");
    }

    #[test]
    fn parses_native_and_tab_rows() {
        assert_eq!(
            parse_ppdb_line("[NP] ||| are crucial ||| is absolutely vital ||| PPDB2.0Score=3.1 ||| 0-0 ||| Equivalence"),
            Some(("are crucial".into(), "is absolutely vital".into()))
        );
        assert_eq!(
            parse_ppdb_line("a b\tc d"),
            Some(("a b".into(), "c d".into()))
        );
        assert_eq!(parse_ppdb_line("lonely"), None);
    }

    #[test]
    fn counts_per_reason_and_dedups() {
        let raw: Vec<(String, String)> = [
            ("run fast", "http://x.com"),
            ("united nations", "un"),
            ("walked home", "walking home"),
            ("are crucial", "is absolutely vital"),
            ("are crucial", "is absolutely vital"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        let cleaned = clean_ppdb(&raw);
        assert_eq!(cleaned.pairs.len(), 1);
        assert_eq!(cleaned.dropped[&DropReason::Hyperlink], 1);
        assert_eq!(cleaned.dropped[&DropReason::Abbreviation], 1);
        assert_eq!(cleaned.dropped[&DropReason::Tense], 1);
        assert_eq!(cleaned.dropped_total(), 3);
    }
}
