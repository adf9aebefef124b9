//! Binary dump of layerwise token embeddings plus its JSON-lines manifest.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! header   magic "PHRPROBE" (8) | version u32 | hidden_dim u32 | num_layers u32 | num_records u64
//! record   record_id u64 | num_tokens u32 | span_start u32 | span_end u32 | cls_pos i32 | sep_pos i32
//!          | num_layers * num_tokens * hidden_dim f32, layer-major then token-major
//! ```
//!
//! `num_layers` counts the input embedding layer, which is always layer 0.
//! The manifest lives next to the dump as `<dump>.manifest.jsonl` and maps
//! every record to the dataset item and role it serves.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};

pub const MAGIC: &[u8; 8] = b"PHRPROBE";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_BYTES: u64 = 28;
pub const RECORD_HEADER_BYTES: u64 = 28;

/// Cap on per-record non-finite diagnostics; the remainder is summarised.
const MAX_NON_FINITE_DIAGNOSTICS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub format_version: u32,
    pub hidden_dim: u32,
    /// Includes layer 0 (input embeddings).
    pub num_layers: u32,
    pub num_records: u64,
}

impl DumpHeader {
    pub fn new(hidden_dim: u32, num_layers: u32, num_records: u64) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            hidden_dim,
            num_layers,
            num_records,
        }
    }

    pub fn to_bytes(&self) -> [u8; HEADER_BYTES as usize] {
        let mut out = [0u8; HEADER_BYTES as usize];
        out[0..8].copy_from_slice(MAGIC);
        out[8..12].copy_from_slice(&self.format_version.to_le_bytes());
        out[12..16].copy_from_slice(&self.hidden_dim.to_le_bytes());
        out[16..20].copy_from_slice(&self.num_layers.to_le_bytes());
        out[20..28].copy_from_slice(&self.num_records.to_le_bytes());
        out
    }

    fn check(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(ProbeError::UnsupportedVersion {
                offset: 8,
                version: self.format_version,
            });
        }
        if self.hidden_dim == 0 {
            return Err(ProbeError::InvalidHeader("hidden_dim must be >= 1".into()));
        }
        if self.num_layers == 0 {
            return Err(ProbeError::InvalidHeader("num_layers must be >= 1".into()));
        }
        Ok(())
    }
}

/// One input sequence with its embeddings at every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRecord {
    pub record_id: u64,
    pub num_tokens: u32,
    /// Inclusive token span of the phrase.
    pub span_start: u32,
    pub span_end: u32,
    /// Token index of the CLS token, or -1.
    pub cls_pos: i32,
    /// Token index of the SEP token, or -1.
    pub sep_pos: i32,
    pub data: Vec<f32>,
}

impl SequenceRecord {
    pub fn expected_len(num_layers: usize, num_tokens: usize, hidden_dim: usize) -> usize {
        num_layers * num_tokens * hidden_dim
    }

    /// The contiguous `num_tokens x hidden_dim` block of one layer.
    pub fn layer_block(&self, layer: usize, hidden_dim: usize) -> &[f32] {
        let stride = self.num_tokens as usize * hidden_dim;
        &self.data[layer * stride..(layer + 1) * stride]
    }

    pub fn token(&self, layer: usize, token: usize, hidden_dim: usize) -> &[f32] {
        let block = self.layer_block(layer, hidden_dim);
        &block[token * hidden_dim..(token + 1) * hidden_dim]
    }

    pub fn cls(&self) -> Option<usize> {
        usize::try_from(self.cls_pos).ok()
    }

    pub fn sep(&self) -> Option<usize> {
        usize::try_from(self.sep_pos).ok()
    }

    /// Bit-level equality, so NaN payloads compare equal to themselves.
    pub fn bits_eq(&self, other: &SequenceRecord) -> bool {
        self.record_id == other.record_id
            && self.num_tokens == other.num_tokens
            && self.span_start == other.span_start
            && self.span_end == other.span_end
            && self.cls_pos == other.cls_pos
            && self.sep_pos == other.sep_pos
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Source,
    Target,
    LandmarkPhrase,
    LandmarkWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextMode {
    PhraseOnly,
    ContextAvailable,
}

/// Inclusive token span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct TokenSpan {
    pub start: u32,
    pub end: u32,
}

impl From<[u32; 2]> for TokenSpan {
    fn from(v: [u32; 2]) -> Self {
        TokenSpan {
            start: v[0],
            end: v[1],
        }
    }
}

impl From<TokenSpan> for [u32; 2] {
    fn from(s: TokenSpan) -> Self {
        [s.start, s.end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub record_id: u64,
    pub item_id: String,
    pub role: Role,
    pub phrase_text: String,
    pub context_mode: ContextMode,
    /// Sub-token span of the phrase's final word, written by the extractor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_span: Option<TokenSpan>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DumpManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DumpManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        Self { entries }
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&serde_json::to_string(entry)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ManifestEntry =
                serde_json::from_str(line).map_err(|e| ProbeError::Manifest {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            entries.push(entry);
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ProbeError::io(path, e))?;
        Self::from_jsonl(&text)
    }

    /// Every record id must appear exactly once, and no entry may name a
    /// record the dump does not contain.
    fn check_coverage(&self, records: &[SequenceRecord]) -> Result<()> {
        let ids: HashSet<u64> = records.iter().map(|r| r.record_id).collect();
        let mut seen = HashSet::with_capacity(self.entries.len());
        for (i, entry) in self.entries.iter().enumerate() {
            if !seen.insert(entry.record_id) {
                return Err(ProbeError::Manifest {
                    line: i + 1,
                    message: format!("record_id {} listed twice", entry.record_id),
                });
            }
            if !ids.contains(&entry.record_id) {
                return Err(ProbeError::Manifest {
                    line: i + 1,
                    message: format!("record_id {} not present in dump", entry.record_id),
                });
            }
        }
        if let Some(missing) = records.iter().find(|r| !seen.contains(&r.record_id)) {
            return Err(ProbeError::Manifest {
                line: 0,
                message: format!("record_id {} has no manifest entry", missing.record_id),
            });
        }
        Ok(())
    }
}

/// Sidecar manifest location for a dump file.
pub fn manifest_path(dump_path: &Path) -> PathBuf {
    let mut name = dump_path.as_os_str().to_owned();
    name.push(".manifest.jsonl");
    PathBuf::from(name)
}

/// A loaded dump. Immutable once built; safe to share across threads.
#[derive(Debug, Clone)]
pub struct Dump {
    header: DumpHeader,
    records: Vec<SequenceRecord>,
    manifest: DumpManifest,
    by_id: HashMap<u64, usize>,
    entry_by_id: HashMap<u64, usize>,
}

impl Dump {
    /// Assemble a dump, checking header/record/manifest consistency.
    ///
    /// Span and special-token positions are not checked here; see
    /// [`validate_dump`].
    pub fn new(
        header: DumpHeader,
        records: Vec<SequenceRecord>,
        manifest: DumpManifest,
    ) -> Result<Self> {
        check_consistency(&header, &records)?;
        manifest.check_coverage(&records)?;
        let by_id = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.record_id, i))
            .collect();
        let entry_by_id = manifest
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.record_id, i))
            .collect();
        Ok(Self {
            header,
            records,
            manifest,
            by_id,
            entry_by_id,
        })
    }

    pub fn header(&self) -> &DumpHeader {
        &self.header
    }

    pub fn hidden_dim(&self) -> usize {
        self.header.hidden_dim as usize
    }

    pub fn num_layers(&self) -> usize {
        self.header.num_layers as usize
    }

    pub fn records(&self) -> &[SequenceRecord] {
        &self.records
    }

    pub fn manifest(&self) -> &DumpManifest {
        &self.manifest
    }

    pub fn record(&self, record_id: u64) -> Option<&SequenceRecord> {
        self.by_id.get(&record_id).map(|&i| &self.records[i])
    }

    pub fn entry(&self, record_id: u64) -> Option<&ManifestEntry> {
        self.entry_by_id
            .get(&record_id)
            .map(|&i| &self.manifest.entries[i])
    }

    /// A record together with the dimensions and head-word span needed to pool it.
    pub fn view(&self, record_id: u64) -> Option<RecordView<'_>> {
        let record = self.record(record_id)?;
        Some(RecordView {
            record,
            hidden_dim: self.hidden_dim(),
            num_layers: self.num_layers(),
            head_span: self.entry(record_id).and_then(|e| e.head_span),
        })
    }

    pub fn into_parts(self) -> (DumpHeader, Vec<SequenceRecord>, DumpManifest) {
        (self.header, self.records, self.manifest)
    }

    /// Merge several dumps from the same model. Hidden width and layer count
    /// must agree and record ids must not collide.
    pub fn merge(dumps: Vec<Dump>) -> Result<Dump> {
        let mut iter = dumps.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| ProbeError::Config("no dumps to merge".into()))?;
        let (header, mut records, mut manifest) = first.into_parts();
        for other in iter {
            let (h, r, m) = other.into_parts();
            if h.hidden_dim != header.hidden_dim || h.num_layers != header.num_layers {
                return Err(ProbeError::Config(format!(
                    "mixed dumps: hidden_dim {} / {} layers vs hidden_dim {} / {} layers",
                    header.hidden_dim, header.num_layers, h.hidden_dim, h.num_layers
                )));
            }
            records.extend(r);
            manifest.entries.extend(m.entries);
        }
        let merged = DumpHeader::new(header.hidden_dim, header.num_layers, records.len() as u64);
        Dump::new(merged, records, manifest)
    }
}

/// Borrowed view of one record with everything pooling needs.
#[derive(Debug, Clone, Copy)]
pub struct RecordView<'a> {
    pub record: &'a SequenceRecord,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub head_span: Option<TokenSpan>,
}

impl<'a> RecordView<'a> {
    pub fn new(record: &'a SequenceRecord, hidden_dim: usize, num_layers: usize) -> Self {
        Self {
            record,
            hidden_dim,
            num_layers,
            head_span: None,
        }
    }

    pub fn with_head_span(mut self, span: Option<TokenSpan>) -> Self {
        self.head_span = span;
        self
    }

    pub fn token(&self, layer: usize, token: usize) -> &'a [f32] {
        self.record.token(layer, token, self.hidden_dim)
    }

    pub fn layer_block(&self, layer: usize) -> &'a [f32] {
        self.record.layer_block(layer, self.hidden_dim)
    }
}

fn check_consistency(header: &DumpHeader, records: &[SequenceRecord]) -> Result<()> {
    header.check()?;
    if header.num_records != records.len() as u64 {
        return Err(ProbeError::InvalidHeader(format!(
            "header declares {} records, {} supplied",
            header.num_records,
            records.len()
        )));
    }
    let (l, d) = (header.num_layers as usize, header.hidden_dim as usize);
    let mut ids = HashSet::with_capacity(records.len());
    for r in records {
        if !ids.insert(r.record_id) {
            return Err(ProbeError::InvalidHeader(format!(
                "duplicate record_id {}",
                r.record_id
            )));
        }
        let expected = SequenceRecord::expected_len(l, r.num_tokens as usize, d);
        if r.data.len() != expected {
            return Err(ProbeError::InvalidHeader(format!(
                "record {} carries {} floats, expected {} ({} layers x {} tokens x {} dims)",
                r.record_id,
                r.data.len(),
                expected,
                l,
                r.num_tokens,
                d
            )));
        }
    }
    Ok(())
}

/// Serialise header and records. Fails on inconsistent dimensions or any
/// non-finite value.
pub fn encode_dump(header: &DumpHeader, records: &[SequenceRecord]) -> Result<Vec<u8>> {
    check_consistency(header, records)?;
    let (l, d) = (header.num_layers as usize, header.hidden_dim as usize);
    let payload: usize = records.iter().map(|r| r.data.len() * 4).sum();
    let mut out = Vec::with_capacity(
        HEADER_BYTES as usize + records.len() * RECORD_HEADER_BYTES as usize + payload,
    );
    out.extend_from_slice(&header.to_bytes());
    for r in records {
        if let Some(pos) = r.data.iter().position(|v| !v.is_finite()) {
            let t = r.num_tokens as usize;
            return Err(ProbeError::NonFinite {
                record_id: r.record_id,
                layer: pos / (t * d),
                token: (pos / d) % t,
                dim: pos % d,
            });
        }
        debug_assert_eq!(r.data.len(), l * r.num_tokens as usize * d);
        out.extend_from_slice(&r.record_id.to_le_bytes());
        out.extend_from_slice(&r.num_tokens.to_le_bytes());
        out.extend_from_slice(&r.span_start.to_le_bytes());
        out.extend_from_slice(&r.span_end.to_le_bytes());
        out.extend_from_slice(&r.cls_pos.to_le_bytes());
        out.extend_from_slice(&r.sep_pos.to_le_bytes());
        for v in &r.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Write the binary dump to `destination` and its manifest alongside it.
pub fn write_dump(
    header: &DumpHeader,
    records: &[SequenceRecord],
    manifest: &DumpManifest,
    destination: &Path,
) -> Result<()> {
    let bytes = encode_dump(header, records)?;
    manifest.check_coverage(records)?;
    let jsonl = manifest.to_jsonl()?;

    let file = File::create(destination).map_err(|e| ProbeError::io(destination, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes)
        .and_then(|_| w.flush())
        .map_err(|e| ProbeError::io(destination, e))?;

    let mpath = manifest_path(destination);
    std::fs::write(&mpath, jsonl).map_err(|e| ProbeError::io(&mpath, e))?;
    Ok(())
}

/// Convenience wrapper writing an assembled [`Dump`].
pub fn write(dump: &Dump, destination: &Path) -> Result<()> {
    write_dump(&dump.header, &dump.records, &dump.manifest, destination)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: impl FnOnce() -> String) -> Result<&'a [u8]> {
        let remaining = self.bytes.len() - self.pos;
        if remaining < n {
            return Err(ProbeError::Truncated {
                offset: self.bytes.len() as u64,
                what: what(),
                needed: (n - remaining) as u64,
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn i32_at(b: &[u8], at: usize) -> i32 {
    i32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

fn decode_header(bytes: &[u8]) -> Result<DumpHeader> {
    if bytes.len() >= 8 && &bytes[0..8] != MAGIC {
        return Err(ProbeError::BadMagic {
            found: String::from_utf8_lossy(&bytes[0..8]).into_owned(),
        });
    }
    if bytes.len() < HEADER_BYTES as usize {
        if bytes.len() < 8 {
            return Err(ProbeError::BadMagic {
                found: String::from_utf8_lossy(bytes).into_owned(),
            });
        }
        return Err(ProbeError::Truncated {
            offset: bytes.len() as u64,
            what: "file header".into(),
            needed: HEADER_BYTES - bytes.len() as u64,
        });
    }
    let header = DumpHeader {
        format_version: u32_at(bytes, 8),
        hidden_dim: u32_at(bytes, 12),
        num_layers: u32_at(bytes, 16),
        num_records: u64_at(bytes, 20),
    };
    header.check()?;
    Ok(header)
}

fn decode_record_header(b: &[u8]) -> (u64, u32, u32, u32, i32, i32) {
    (
        u64_at(b, 0),
        u32_at(b, 8),
        u32_at(b, 12),
        u32_at(b, 16),
        i32_at(b, 20),
        i32_at(b, 24),
    )
}

fn structural_error(r: &SequenceRecord) -> Option<String> {
    let t = r.num_tokens;
    if r.span_start > r.span_end {
        return Some(format!(
            "span start {} > span end {}",
            r.span_start, r.span_end
        ));
    }
    if r.span_end >= t {
        return Some(format!(
            "span [{}, {}] out of range for {} tokens",
            r.span_start, r.span_end, t
        ));
    }
    for (name, pos) in [("cls_pos", r.cls_pos), ("sep_pos", r.sep_pos)] {
        if pos != -1 && (pos < 0 || pos as u32 >= t) {
            return Some(format!("{name} {pos} out of range for {t} tokens"));
        }
    }
    None
}

/// Decode a dump. With `strict`, span and special-token positions are
/// checked as records are read; otherwise only framing is checked.
fn decode(bytes: &[u8], strict: bool) -> Result<(DumpHeader, Vec<SequenceRecord>)> {
    let header = decode_header(bytes)?;
    let (l, d) = (header.num_layers as u64, header.hidden_dim as u64);
    let mut cur = Cursor {
        bytes,
        pos: HEADER_BYTES as usize,
    };
    let mut records = Vec::with_capacity(header.num_records.min(1 << 20) as usize);
    for index in 0..header.num_records {
        let offset = cur.pos as u64;
        let rh = cur.take(RECORD_HEADER_BYTES as usize, || {
            format!("header of record index {index}")
        })?;
        let (record_id, num_tokens, span_start, span_end, cls_pos, sep_pos) =
            decode_record_header(rh);
        let n_floats = l
            .checked_mul(num_tokens as u64)
            .and_then(|x| x.checked_mul(d))
            .filter(|&n| n.checked_mul(4).is_some())
            .ok_or_else(|| ProbeError::InvalidRecord {
                offset,
                record_id,
                message: "payload size overflows".into(),
            })?;
        let n_bytes = n_floats * 4;
        if n_bytes > (bytes.len() - cur.pos) as u64 {
            return Err(ProbeError::Truncated {
                offset: bytes.len() as u64,
                what: format!("tensor payload of record_id {record_id} (index {index})"),
                needed: n_bytes - (bytes.len() - cur.pos) as u64,
            });
        }
        let raw = cur.take(n_bytes as usize, String::new)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let record = SequenceRecord {
            record_id,
            num_tokens,
            span_start,
            span_end,
            cls_pos,
            sep_pos,
            data,
        };
        if strict {
            if let Some(message) = structural_error(&record) {
                return Err(ProbeError::InvalidRecord {
                    offset,
                    record_id,
                    message,
                });
            }
        }
        records.push(record);
    }
    if cur.pos != bytes.len() {
        return Err(ProbeError::TrailingBytes {
            offset: cur.pos as u64,
            count: (bytes.len() - cur.pos) as u64,
        });
    }
    Ok((header, records))
}

pub fn decode_dump(bytes: &[u8]) -> Result<(DumpHeader, Vec<SequenceRecord>)> {
    decode(bytes, true)
}

/// Framing-only decode, for feeding possibly-invalid records to [`validate_dump`].
pub fn decode_dump_lenient(bytes: &[u8]) -> Result<(DumpHeader, Vec<SequenceRecord>)> {
    decode(bytes, false)
}

fn read_with(path: &Path, strict: bool) -> Result<Dump> {
    let bytes = std::fs::read(path).map_err(|e| ProbeError::io(path, e))?;
    let (header, records) = decode(&bytes, strict)?;
    let manifest = DumpManifest::read(&manifest_path(path))?;
    Dump::new(header, records, manifest)
}

/// Read a dump and its sidecar manifest. Structural record errors (span or
/// special-token position out of range) are rejected with their byte offset.
pub fn read_dump(path: &Path) -> Result<Dump> {
    read_with(path, true)
}

/// Like [`read_dump`] but accepts structurally invalid records so they can be
/// reported by [`validate_dump`].
pub fn read_dump_lenient(path: &Path) -> Result<Dump> {
    read_with(path, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    SpanOrder,
    SpanOutOfRange,
    ClsOutOfRange,
    SepOutOfRange,
    HeadSpanOutOfRange,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub record_id: u64,
    pub kind: DiagnosticKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layer: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub token: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    fn record(record_id: u64, kind: DiagnosticKind, message: String) -> Self {
        Self {
            record_id,
            kind,
            layer: None,
            token: None,
            dim: None,
            message,
        }
    }
}

/// Check every record invariant; returns an empty list iff all hold.
pub fn validate_dump(dump: &Dump) -> Vec<Diagnostic> {
    let d = dump.hidden_dim();
    let mut out = Vec::new();
    for r in dump.records() {
        let id = r.record_id;
        let t = r.num_tokens;
        if r.span_start > r.span_end {
            out.push(Diagnostic::record(
                id,
                DiagnosticKind::SpanOrder,
                format!("span start {} > span end {}", r.span_start, r.span_end),
            ));
        }
        if r.span_end >= t || r.span_start >= t {
            out.push(Diagnostic::record(
                id,
                DiagnosticKind::SpanOutOfRange,
                format!("span [{}, {}] outside 0..{}", r.span_start, r.span_end, t),
            ));
        }
        if r.cls_pos != -1 && (r.cls_pos < 0 || r.cls_pos as u32 >= t) {
            out.push(Diagnostic::record(
                id,
                DiagnosticKind::ClsOutOfRange,
                format!("cls_pos {} outside -1 or 0..{}", r.cls_pos, t),
            ));
        }
        if r.sep_pos != -1 && (r.sep_pos < 0 || r.sep_pos as u32 >= t) {
            out.push(Diagnostic::record(
                id,
                DiagnosticKind::SepOutOfRange,
                format!("sep_pos {} outside -1 or 0..{}", r.sep_pos, t),
            ));
        }
        if let Some(hs) = dump.entry(id).and_then(|e| e.head_span) {
            if hs.start > hs.end || hs.end >= t {
                out.push(Diagnostic::record(
                    id,
                    DiagnosticKind::HeadSpanOutOfRange,
                    format!("head span [{}, {}] outside 0..{}", hs.start, hs.end, t),
                ));
            }
        }
        let t = t as usize;
        let mut bad = r
            .data
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_finite())
            .map(|(i, _)| i);
        for pos in bad.by_ref().take(MAX_NON_FINITE_DIAGNOSTICS) {
            let (layer, token, dim) = (pos / (t * d), (pos / d) % t, pos % d);
            out.push(Diagnostic {
                record_id: id,
                kind: DiagnosticKind::NonFinite,
                layer: Some(layer),
                token: Some(token),
                dim: Some(dim),
                message: format!(
                    "non-finite value {} at layer {layer}, token {token}, dim {dim}",
                    r.data[pos]
                ),
            });
        }
        let rest = bad.count();
        if rest > 0 {
            out.push(Diagnostic::record(
                id,
                DiagnosticKind::NonFinite,
                format!("{rest} further non-finite values not listed"),
            ));
        }
    }
    out
}

/// Seekable reader that loads single layer blocks without reading the whole
/// file.
pub struct DumpReader {
    file: BufReader<File>,
    path: PathBuf,
    header: DumpHeader,
    index: Vec<RecordLocation>,
}

#[derive(Debug, Clone, Copy)]
struct RecordLocation {
    record_id: u64,
    num_tokens: u32,
    data_offset: u64,
}

impl DumpReader {
    pub fn open(path: &Path) -> Result<Self> {
        let io = |e| ProbeError::io(path, e);
        let mut file = BufReader::new(File::open(path).map_err(io)?);
        let file_len = file.get_ref().metadata().map_err(io)?.len();
        let mut head = [0u8; HEADER_BYTES as usize];
        let got = read_up_to(&mut file, &mut head).map_err(io)?;
        let header = decode_header(&head[..got])?;
        let (l, d) = (header.num_layers as u64, header.hidden_dim as u64);

        let mut index = Vec::with_capacity(header.num_records.min(1 << 20) as usize);
        let mut offset = HEADER_BYTES;
        for i in 0..header.num_records {
            let mut rh = [0u8; RECORD_HEADER_BYTES as usize];
            let got = read_up_to(&mut file, &mut rh).map_err(io)?;
            if got < rh.len() {
                return Err(ProbeError::Truncated {
                    offset: offset + got as u64,
                    what: format!("header of record index {i}"),
                    needed: (rh.len() - got) as u64,
                });
            }
            let (record_id, num_tokens, ..) = decode_record_header(&rh);
            let data_offset = offset + RECORD_HEADER_BYTES;
            let n_bytes = l * num_tokens as u64 * d * 4;
            if data_offset + n_bytes > file_len {
                return Err(ProbeError::Truncated {
                    offset: file_len,
                    what: format!("tensor payload of record_id {record_id} (index {i})"),
                    needed: data_offset + n_bytes - file_len,
                });
            }
            index.push(RecordLocation {
                record_id,
                num_tokens,
                data_offset,
            });
            offset = data_offset + n_bytes;
            file.seek(SeekFrom::Start(offset)).map_err(io)?;
        }
        Ok(Self {
            file,
            path: path.to_path_buf(),
            header,
            index,
        })
    }

    pub fn header(&self) -> &DumpHeader {
        &self.header
    }

    pub fn record_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.index.iter().map(|r| r.record_id)
    }

    /// The `num_tokens x hidden_dim` block of `layer` in the record at
    /// position `index`.
    pub fn read_layer(&mut self, index: usize, layer: usize) -> Result<Vec<f32>> {
        let loc = *self
            .index
            .get(index)
            .ok_or_else(|| ProbeError::Config(format!("record index {index} out of range")))?;
        if layer >= self.header.num_layers as usize {
            return Err(ProbeError::LayerOutOfRange {
                layer,
                num_layers: self.header.num_layers as usize,
            });
        }
        let block = loc.num_tokens as u64 * self.header.hidden_dim as u64 * 4;
        let start = loc.data_offset + layer as u64 * block;
        let mut buf = vec![0u8; block as usize];
        let path = &self.path;
        self.file
            .seek(SeekFrom::Start(start))
            .and_then(|_| self.file.read_exact(&mut buf))
            .map_err(|e| ProbeError::io(path, e))?;
        Ok(buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..])? {
            0 => break,
            n => got += n,
        }
    }
    Ok(got)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, t: u32, a: u32, b: u32, l: usize, d: usize) -> SequenceRecord {
        let n = l * t as usize * d;
        SequenceRecord {
            record_id: id,
            num_tokens: t,
            span_start: a,
            span_end: b,
            cls_pos: -1,
            sep_pos: -1,
            data: (0..n).map(|i| i as f32 * 0.5).collect(),
        }
    }

    fn entry(id: u64) -> ManifestEntry {
        ManifestEntry {
            record_id: id,
            item_id: format!("it-{id}"),
            role: Role::Source,
            phrase_text: "law school".into(),
            context_mode: ContextMode::PhraseOnly,
            head_span: None,
        }
    }

    #[test]
    fn empty_dump_is_header_only() {
        let h = DumpHeader::new(2, 1, 0);
        let bytes = encode_dump(&h, &[]).unwrap();
        assert_eq!(bytes.len(), 28);
        assert_eq!(&bytes[..8], b"PHRPROBE");
    }

    #[test]
    fn single_record_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.dump");
        let r = SequenceRecord {
            record_id: 7,
            num_tokens: 1,
            span_start: 0,
            span_end: 0,
            cls_pos: -1,
            sep_pos: -1,
            data: vec![0.0, 0.0],
        };
        let h = DumpHeader::new(2, 1, 1);
        write_dump(
            &h,
            std::slice::from_ref(&r),
            &DumpManifest::new(vec![entry(7)]),
            &path,
        )
        .unwrap();
        let dump = read_dump(&path).unwrap();
        assert_eq!(dump.header(), &h);
        assert!(dump.records()[0].bits_eq(&r));
        assert_eq!(dump.records()[0].num_tokens, 1);
        assert_eq!(dump.hidden_dim(), 2);
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = encode_dump(&DumpHeader::new(2, 1, 0), &[]).unwrap();
        bytes[..8].copy_from_slice(b"XXXXXXXX");
        match decode_dump(&bytes) {
            Err(ProbeError::BadMagic { found }) => assert_eq!(found, "XXXXXXXX"),
            other => panic!("expected bad magic, got {other:?}"),
        }
    }

    #[test]
    fn unsupported_version_rejected() {
        let mut bytes = encode_dump(&DumpHeader::new(2, 1, 0), &[]).unwrap();
        bytes[8..12].copy_from_slice(&9u32.to_le_bytes());
        assert!(matches!(
            decode_dump(&bytes),
            Err(ProbeError::UnsupportedVersion {
                offset: 8,
                version: 9
            })
        ));
    }

    #[test]
    fn truncation_names_record() {
        let records = vec![rec(11, 3, 0, 1, 2, 4), rec(42, 2, 0, 1, 2, 4)];
        let bytes = encode_dump(&DumpHeader::new(4, 2, 2), &records).unwrap();
        let cut = &bytes[..bytes.len() - 5];
        match decode_dump(cut) {
            Err(ProbeError::Truncated { what, needed, .. }) => {
                assert!(what.contains("record_id 42"), "{what}");
                assert_eq!(needed, 5);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = encode_dump(&DumpHeader::new(2, 1, 0), &[]).unwrap();
        bytes.push(0);
        assert!(matches!(
            decode_dump(&bytes),
            Err(ProbeError::TrailingBytes {
                offset: 28,
                count: 1
            })
        ));
    }

    #[test]
    fn strict_read_reports_span_with_offset() {
        let mut r = rec(5, 2, 0, 1, 1, 2);
        r.span_end = 4;
        let bytes = encode_dump(&DumpHeader::new(2, 1, 1), &[r]).unwrap();
        match decode_dump(&bytes) {
            Err(ProbeError::InvalidRecord {
                offset, record_id, ..
            }) => {
                assert_eq!(offset, 28);
                assert_eq!(record_id, 5);
            }
            other => panic!("{other:?}"),
        }
        assert!(decode_dump_lenient(&bytes).is_ok());
    }

    #[test]
    fn write_rejects_inconsistent_and_non_finite() {
        let r = rec(1, 2, 0, 1, 1, 2);
        assert!(encode_dump(&DumpHeader::new(3, 1, 1), std::slice::from_ref(&r)).is_err());
        assert!(encode_dump(&DumpHeader::new(2, 1, 2), std::slice::from_ref(&r)).is_err());
        let mut bad = r;
        bad.data[3] = f32::INFINITY;
        assert!(matches!(
            encode_dump(&DumpHeader::new(2, 1, 1), &[bad]),
            Err(ProbeError::NonFinite {
                record_id: 1,
                layer: 0,
                token: 1,
                dim: 1
            })
        ));
    }

    #[test]
    fn unwritable_destination() {
        let r = rec(1, 1, 0, 0, 1, 1);
        let err = write_dump(
            &DumpHeader::new(1, 1, 1),
            &[r],
            &DumpManifest::new(vec![entry(1)]),
            Path::new("/nonexistent-dir/x.dump"),
        )
        .unwrap_err();
        assert!(matches!(err, ProbeError::Io { .. }));
    }

    #[test]
    fn manifest_must_cover_records_exactly_once() {
        let h = DumpHeader::new(1, 1, 1);
        let r = rec(1, 1, 0, 0, 1, 1);
        assert!(Dump::new(h, vec![r.clone()], DumpManifest::default()).is_err());
        assert!(Dump::new(
            h,
            vec![r.clone()],
            DumpManifest::new(vec![entry(1), entry(1)])
        )
        .is_err());
        assert!(Dump::new(h, vec![r], DumpManifest::new(vec![entry(1), entry(2)])).is_err());
    }

    fn dump_of(records: Vec<SequenceRecord>, l: u32, d: u32) -> Dump {
        let entries = records.iter().map(|r| entry(r.record_id)).collect();
        Dump::new(
            DumpHeader::new(d, l, records.len() as u64),
            records,
            DumpManifest::new(entries),
        )
        .unwrap()
    }

    #[test]
    fn validate_well_formed_is_empty() {
        let d = dump_of(vec![rec(1, 3, 0, 2, 2, 3), rec(2, 1, 0, 0, 2, 3)], 2, 3);
        assert!(validate_dump(&d).is_empty());
    }

    #[test]
    fn validate_catches_each_invariant() {
        let mut order = rec(1, 3, 2, 1, 1, 2);
        order.span_start = 2;
        let mut range = rec(2, 3, 0, 3, 1, 2);
        range.span_end = 3;
        let mut cls = rec(3, 3, 0, 1, 1, 2);
        cls.cls_pos = 3;
        let mut sep = rec(4, 3, 0, 1, 1, 2);
        sep.sep_pos = -2;
        let d = dump_of(vec![order, range, cls, sep], 1, 2);
        let diags = validate_dump(&d);
        let kinds: Vec<_> = diags.iter().map(|x| (x.record_id, x.kind)).collect();
        assert_eq!(
            kinds,
            vec![
                (1, DiagnosticKind::SpanOrder),
                (2, DiagnosticKind::SpanOutOfRange),
                (3, DiagnosticKind::ClsOutOfRange),
                (4, DiagnosticKind::SepOutOfRange),
            ]
        );
    }

    #[test]
    fn validate_locates_nan() {
        let (l, t, d) = (3usize, 4usize, 5usize);
        let mut r = rec(9, t as u32, 0, 1, l, d);
        let (layer, token, dim) = (2, 1, 3);
        r.data[layer * t * d + token * d + dim] = f32::NAN;
        let dump = dump_of(vec![r], l as u32, d as u32);
        let diags = validate_dump(&dump);
        assert_eq!(diags.len(), 1);
        let diag = &diags[0];
        assert_eq!(diag.record_id, 9);
        assert_eq!(diag.kind, DiagnosticKind::NonFinite);
        assert_eq!(
            (diag.layer, diag.token, diag.dim),
            (Some(layer), Some(token), Some(dim))
        );
    }

    #[test]
    fn validate_caps_non_finite_listing() {
        let mut r = rec(1, 10, 0, 1, 1, 10);
        r.data.iter_mut().for_each(|v| *v = f32::NAN);
        let diags = validate_dump(&dump_of(vec![r], 1, 10));
        assert_eq!(diags.len(), MAX_NON_FINITE_DIAGNOSTICS + 1);
        assert!(diags.last().unwrap().message.contains("68 further"));
    }

    #[test]
    fn layer_block_is_contiguous_slice() {
        let (l, t, d) = (3, 4, 2);
        let r = rec(1, t as u32, 0, 1, l, d);
        for layer in 0..l {
            let block = r.layer_block(layer, d);
            assert_eq!(block, &r.data[layer * t * d..(layer + 1) * t * d]);
        }
    }

    #[test]
    fn seekable_reader_matches_in_memory_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.dump");
        let records = vec![rec(3, 2, 0, 1, 3, 4), rec(8, 5, 1, 3, 3, 4)];
        let entries = records.iter().map(|r| entry(r.record_id)).collect();
        write_dump(
            &DumpHeader::new(4, 3, 2),
            &records,
            &DumpManifest::new(entries),
            &path,
        )
        .unwrap();
        let mut reader = DumpReader::open(&path).unwrap();
        assert_eq!(reader.record_ids().collect::<Vec<_>>(), vec![3, 8]);
        for (i, r) in records.iter().enumerate() {
            for layer in 0..3 {
                assert_eq!(
                    reader.read_layer(i, layer).unwrap(),
                    r.layer_block(layer, 4)
                );
            }
        }
        assert!(reader.read_layer(0, 3).is_err());
    }

    #[test]
    fn merge_rejects_mixed_dims() {
        let a = dump_of(vec![rec(1, 1, 0, 0, 1, 2)], 1, 2);
        let b = dump_of(vec![rec(2, 1, 0, 0, 1, 3)], 1, 3);
        assert!(Dump::merge(vec![a.clone(), b]).is_err());
        let c = dump_of(vec![rec(2, 1, 0, 0, 1, 2)], 1, 2);
        let merged = Dump::merge(vec![a, c]).unwrap();
        assert_eq!(merged.header().num_records, 2);
    }

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(
            manifest_path(Path::new("/tmp/a.dump")),
            PathBuf::from("/tmp/a.dump.manifest.jsonl")
        );
    }

    #[test]
    fn manifest_jsonl_shape() {
        let mut e = entry(3);
        e.head_span = Some(TokenSpan { start: 2, end: 3 });
        e.role = Role::LandmarkWord;
        let text = DumpManifest::new(vec![e.clone()]).to_jsonl().unwrap();
        assert_eq!(
            text,
            "{\"record_id\":3,\"item_id\":\"it-3\",\"role\":\"landmark-word\",\"phrase_text\":\"law school\",\"context_mode\":\"phrase-only\",\"head_span\":[2,3]}\n"
        );
        assert_eq!(DumpManifest::from_jsonl(&text).unwrap().entries, vec![e]);
    }
}
