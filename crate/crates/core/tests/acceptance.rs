//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances and runtime limits are fixed here.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phrprobe_core::classifier::{evaluate, gradient_check, train, PairFeature, TrainConfig};
use phrprobe_core::dataset::{
    filter_abba, is_abba, load_bird, read_jsonl, tokenize, word_overlap, write_jsonl, Label,
    NegativeSampling, Subset,
};
use phrprobe_core::landmark::{landmark_eval, load_landmark_items, LandmarkItem};
use phrprobe_core::pipeline::{
    cmd_analyze, cmd_build_dataset, load_metric_grid, BuildConfig, RunConfig, PARAPHRASE_FILE,
};
use phrprobe_core::pooling::{pool, ReprType};
use phrprobe_core::similarity::{cosine, pearson};
use phrprobe_core::store::{
    decode_dump, decode_dump_lenient, read_dump, validate_dump, write, DiagnosticKind, Dump,
    DumpManifest, HEADER_BYTES, RECORD_HEADER_BYTES,
};
use phrprobe_core::synthetic::{
    correlation_contrast, gaussian_blobs, landmark_dump, random_dump, LandmarkMode, Layout,
    RandomDumpSpec,
};
use phrprobe_core::ClassifierModel;

const ROUND_TRIP_DUMPS: u64 = 1_000;
const POOLING_SAMPLES: usize = 10_000;
const POOLING_REL_TOL: f64 = 1e-5;
const ORACLE_SEQUENCES: u64 = 1_000;
const ORACLE_TOL: f64 = 1e-9;
const AFFINE_TOL: f64 = 1e-12;
const ABBA_EXPECTED: usize = 410;
const BIRD_FULL: usize = 3_345;
const BLOB_MIN_ACCURACY: f64 = 0.99;
const NULL_BAND: (f64, f64) = (0.45, 0.55);
const GRAD_TOL: f64 = 1e-6;
const CONTRAST_FULL_MIN: f64 = 0.99;
const CONTRAST_ABBA_MAX: f64 = 0.1;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<String, String> {
    let took = start.elapsed();
    check(took <= limit, || {
        format!("took {took:.1?}, limit {limit:?}")
    })?;
    Ok(format!("{took:.1?}"))
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

// ---------------------------------------------------------------- 1

fn record_offsets(dump: &Dump) -> Vec<usize> {
    let mut off = HEADER_BYTES as usize;
    dump.records()
        .iter()
        .map(|r| {
            let here = off;
            off += RECORD_HEADER_BYTES as usize + r.data.len() * 4;
            here
        })
        .collect()
}

fn format_round_trip() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc1);
    let (mut truncations, mut nans, mut spans) = (0, 0, 0);
    for seed in 0..ROUND_TRIP_DUMPS {
        let dump = random_dump(RandomDumpSpec::default(), seed);
        write(&dump, &a).map_err(|e| e.to_string())?;
        let back = read_dump(&a).map_err(|e| format!("seed {seed}: {e}"))?;
        write(&back, &b).map_err(|e| e.to_string())?;
        let (ba, bb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        check(ba == bb, || format!("seed {seed}: rewrite differs"))?;
        check(
            std::fs::read(phrprobe_core::store::manifest_path(&a)).unwrap()
                == std::fs::read(phrprobe_core::store::manifest_path(&b)).unwrap(),
            || format!("seed {seed}: manifest rewrite differs"),
        )?;
        check(validate_dump(&back).is_empty(), || {
            format!("seed {seed}: valid dump flagged")
        })?;

        // Truncation anywhere short of the full length is rejected.
        let cut = rng.random_range(0..ba.len());
        check(decode_dump(&ba[..cut]).is_err(), || {
            format!("seed {seed}: cut at {cut} accepted")
        })?;
        check(decode_dump_lenient(&ba[..cut]).is_err(), || {
            format!("seed {seed}: lenient cut at {cut} accepted")
        })?;
        truncations += 1;

        let offsets = record_offsets(&back);
        if offsets.is_empty() {
            continue;
        }
        let i = rng.random_range(0..offsets.len());
        let rec = &back.records()[i];
        let entries = back.manifest().entries.clone();

        // A NaN at a random payload position is reported at its coordinates.
        let pos = rng.random_range(0..rec.data.len());
        let mut bytes = ba.clone();
        let at = offsets[i] + RECORD_HEADER_BYTES as usize + 4 * pos;
        bytes[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        let (h, recs) = decode_dump_lenient(&bytes).map_err(|e| e.to_string())?;
        let corrupted = Dump::new(h, recs, DumpManifest::new(entries.clone())).unwrap();
        let diags = validate_dump(&corrupted);
        let (d, t) = (back.hidden_dim(), rec.num_tokens as usize);
        let want = (pos / (t * d), (pos / d) % t, pos % d);
        check(
            diags.len() == 1
                && diags[0].kind == DiagnosticKind::NonFinite
                && diags[0].record_id == rec.record_id
                && (diags[0].layer, diags[0].token, diags[0].dim)
                    == (Some(want.0), Some(want.1), Some(want.2)),
            || format!("seed {seed}: NaN diagnostics {diags:?}, expected {want:?}"),
        )?;
        nans += 1;

        // A reversed span is rejected by the strict reader and reported by
        // validation.
        let mut bytes = ba.clone();
        let o = offsets[i];
        bytes[o + 12..o + 16].copy_from_slice(&(rec.num_tokens + 1).to_le_bytes());
        bytes[o + 16..o + 20].copy_from_slice(&0u32.to_le_bytes());
        check(decode_dump(&bytes).is_err(), || {
            format!("seed {seed}: bad span accepted")
        })?;
        let (h, recs) = decode_dump_lenient(&bytes).map_err(|e| e.to_string())?;
        let corrupted = Dump::new(h, recs, DumpManifest::new(entries)).unwrap();
        let diags = validate_dump(&corrupted);
        check(
            diags
                .iter()
                .any(|d| d.kind == DiagnosticKind::SpanOrder && d.record_id == rec.record_id),
            || format!("seed {seed}: span corruption not reported: {diags:?}"),
        )?;
        spans += 1;
    }
    let took = within(Duration::from_secs(60), start)?;
    Ok(format!(
        "{ROUND_TRIP_DUMPS} dumps byte-identical; {truncations} truncations, {nans} NaNs, {spans} span corruptions caught ({took})"
    ))
}

// ---------------------------------------------------------------- 2

/// Brute-force double-precision pooling, written from the definitions.
fn oracle_pool(dump: &Dump, id: u64, layer: usize, repr: ReprType) -> Option<Vec<f64>> {
    let rec = dump.record(id).unwrap();
    let d = dump.hidden_dim();
    let t = rec.num_tokens as usize;
    let at = |tok: usize, k: usize| rec.data[layer * t * d + tok * d + k] as f64;
    let mean = |toks: Vec<usize>| -> Vec<f64> {
        (0..d)
            .map(|k| toks.iter().map(|&tok| at(tok, k)).sum::<f64>() / toks.len() as f64)
            .collect()
    };
    let (a, b) = (rec.span_start as usize, rec.span_end as usize);
    match repr {
        ReprType::Cls if rec.cls_pos >= 0 => Some(mean(vec![rec.cls_pos as usize])),
        ReprType::Sep if rec.sep_pos >= 0 => Some(mean(vec![rec.sep_pos as usize])),
        ReprType::Cls | ReprType::Sep => None,
        ReprType::HeadWord => match dump.entry(id).unwrap().head_span {
            Some(h) => Some(mean((h.start as usize..=h.end as usize).collect())),
            None => Some(mean(vec![b])),
        },
        ReprType::AvgPhrase => Some(mean((a..=b).collect())),
        ReprType::AvgAll => Some(mean((0..t).collect())),
    }
}

fn pooling_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc2);
    let spec = RandomDumpSpec {
        max_hidden_dim: 12,
        max_layers: 5,
        max_records: 8,
        max_tokens: 9,
    };
    let (mut samples, mut undefined, mut seed) = (0usize, 0usize, 0u64);
    let mut worst = 0f64;
    while samples < POOLING_SAMPLES {
        let dump = random_dump(spec, 10_000 + seed);
        seed += 1;
        if dump.records().is_empty() {
            continue;
        }
        for _ in 0..50 {
            let rec = dump.records().choose(&mut rng).unwrap();
            let layer = rng.random_range(0..dump.num_layers());
            let repr = *ReprType::ALL.choose(&mut rng).unwrap();
            let got = pool(&dump.view(rec.record_id).unwrap(), layer, repr);
            let want = oracle_pool(&dump, rec.record_id, layer, repr);
            match (got, want) {
                (Ok(g), Some(w)) => {
                    for (&gv, &wv) in g.values.iter().zip(&w) {
                        let err = (gv as f64 - wv).abs();
                        let rel = if wv == 0.0 { err } else { err / wv.abs() };
                        worst = worst.max(rel);
                        check(rel <= POOLING_REL_TOL, || {
                            format!(
                                "record {} layer {layer} {repr}: {gv} vs {wv}",
                                rec.record_id
                            )
                        })?;
                    }
                }
                (Err(_), None) => undefined += 1,
                (g, w) => {
                    return Err(format!(
                        "record {} layer {layer} {repr}: pool {:?} vs oracle {:?}",
                        rec.record_id,
                        g.map(|p| p.values),
                        w
                    ))
                }
            }
            samples += 1;
        }
    }
    let took = within(Duration::from_secs(60), start)?;
    Ok(format!(
        "{samples} samples ({undefined} absent special tokens agree), worst relative error {worst:.2e} ({took})"
    ))
}

// ---------------------------------------------------------------- 3

fn pearson_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (sx, sy): (f64, f64) = (xs.iter().sum(), ys.iter().sum());
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}

fn cosine_oracle(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().rev().zip(v.iter().rev()).map(|(a, b)| a * b).sum();
    let nu = u.iter().rev().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().rev().map(|b| b * b).sum::<f64>().sqrt();
    dot / nu / nv
}

fn statistic_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc3);
    let mut worst = 0f64;
    for i in 0..ORACLE_SEQUENCES {
        let n = rng.random_range(2..200);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let noise = rng.random_range(0.0..3.0);
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| 0.7 * x + noise * rng.random_range(-1.0..1.0))
            .collect();
        let r = pearson(&xs, &ys).map_err(|e| format!("sequence {i}: {e}"))?;
        let err = (r - pearson_oracle(&xs, &ys)).abs();
        worst = worst.max(err);
        check(err <= ORACLE_TOL, || {
            format!("sequence {i}: pearson off by {err:e}")
        })?;

        let c = cosine(&xs, &ys).map_err(|e| format!("sequence {i}: {e}"))?;
        let err = (c - cosine_oracle(&xs, &ys)).abs();
        worst = worst.max(err);
        check(err <= ORACLE_TOL, || {
            format!("sequence {i}: cosine off by {err:e}")
        })?;
    }
    let xs: Vec<f64> = (0..50).map(|_| rng.random_range(-3.0..3.0)).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
    let r = pearson(&xs, &ys).map_err(|e| e.to_string())?;
    check((r - 1.0).abs() <= AFFINE_TOL, || {
        format!("ys = 2xs + 1 gives r = {r}")
    })?;
    Ok(format!(
        "{ORACLE_SEQUENCES} sequences, worst deviation {worst:.2e}; ys = 2xs + 1 gives r = {r}"
    ))
}

// ---------------------------------------------------------------- 4

fn bird_path() -> PathBuf {
    std::env::var_os("PHRPROBE_BIRD")
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace_root().join("data/bird/BiRD.txt"))
}

/// The bundled PPDB fixture plus modifier-head paraphrases that share their head.
fn overlap_ppdb(rng: &mut ChaCha8Rng) -> String {
    let mut text =
        std::fs::read_to_string(workspace_root().join("data/ppdb/mini_ppdb.txt")).unwrap();
    let heads = ["system", "policy", "market", "network", "school", "service"];
    let mods = [
        "public", "local", "global", "digital", "social", "private", "national", "basic",
    ];
    for _ in 0..400 {
        let h = heads.choose(rng).unwrap();
        let (m1, m2) = (mods.choose(rng).unwrap(), mods.choose(rng).unwrap());
        if m1 != m2 {
            text.push_str(&format!("[NP] ||| {m1} {h} ||| {m2} {h} ||| PPDB2.0Score=3.00 ||| 0-0 1-1 ||| Equivalence\n"));
        }
    }
    text
}

fn filter_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc4);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ppdb = dir.path().join("ppdb.txt");
    std::fs::write(&ppdb, overlap_ppdb(&mut rng)).map_err(|e| e.to_string())?;
    let mut overlap_items = 0;
    for negatives in [NegativeSampling::HalfOverlap, NegativeSampling::Uniform] {
        let out = dir.path().join(format!("{negatives:?}"));
        let mut cfg = BuildConfig::new(&out);
        cfg.ppdb = Some(ppdb.clone());
        cfg.seed = 7;
        cfg.controlled_negatives = negatives;
        cmd_build_dataset(&cfg).map_err(|e| e.to_string())?;
        let rows = read_jsonl(&out.join(PARAPHRASE_FILE)).map_err(|e| e.to_string())?;
        let kept: Vec<_> = rows
            .iter()
            .filter(|r| r.subset == Subset::Overlap50)
            .collect();
        let mut balance = std::collections::HashMap::<&str, i64>::new();
        for row in &kept {
            let o = word_overlap(&tokenize(&row.source), &tokenize(&row.target))
                .map_err(|e| e.to_string())?;
            check(o == 0.5, || format!("{} has overlap {o}", row.item_id))?;
            *balance.entry(row.source.as_str()).or_default() +=
                if row.label == Some(Label::Positive) {
                    1
                } else {
                    -1
                };
        }
        check(balance.values().all(|&b| b == 0), || {
            "per-source imbalance".into()
        })?;
        overlap_items += kept.len();
    }
    check(overlap_items > 0, || "controlled set empty".into())?;

    let path = bird_path();
    if !path.is_file() {
        return Err(format!(
            "overlap-50 invariants hold on {overlap_items} items, but the BiRD file is absent at {} \
             (set PHRPROBE_BIRD); the {ABBA_EXPECTED}-pair AB-BA count cannot be checked",
            path.display()
        ));
    }
    let items = load_bird(&path).map_err(|e| e.to_string())?;
    let abba = filter_abba(&items);
    check(abba.len() == ABBA_EXPECTED, || {
        format!(
            "filter_abba kept {} of {} items, expected {ABBA_EXPECTED}",
            abba.len(),
            items.len()
        )
    })?;
    check(items.len() == BIRD_FULL, || {
        format!("BiRD holds {} items, expected {BIRD_FULL}", items.len())
    })?;
    Ok(format!(
        "BiRD {} items -> {} AB-BA; overlap-50 invariants hold on {overlap_items} items",
        items.len(),
        abba.len()
    ))
}

// ---------------------------------------------------------------- 5

fn classifier_sanity() -> Outcome {
    let start = Instant::now();
    let cfg = TrainConfig {
        seed: 11,
        ..TrainConfig::default()
    };
    let dim = 16;
    // One draw so both halves share the class direction; rows alternate labels.
    let mut blobs = gaussian_blobs(1500, dim, 6.0, 1);
    let test_set = blobs.split_off(1000);
    let train_set = blobs;
    let model = train(&train_set, &cfg).map_err(|e| e.to_string())?;
    let acc = evaluate(&model, &test_set).map_err(|e| e.to_string())?;
    check(acc >= BLOB_MIN_ACCURACY, || {
        format!("blob held-out accuracy {acc}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(0xacc5);
    let mut labels: Vec<Label> = train_set.iter().map(|f| f.label).collect();
    labels.shuffle(&mut rng);
    let shuffled: Vec<PairFeature> = train_set
        .iter()
        .zip(labels)
        .map(|(f, label)| PairFeature {
            values: f.values.clone(),
            label,
        })
        .collect();
    let null_model = train(&shuffled, &cfg).map_err(|e| e.to_string())?;
    let null_acc = evaluate(&null_model, &test_set).map_err(|e| e.to_string())?;
    check((NULL_BAND.0..=NULL_BAND.1).contains(&null_acc), || {
        format!("label-shuffled accuracy {null_acc}")
    })?;

    let mut worst = 0f64;
    for k in 0..10 {
        let m = ClassifierModel::init(12, 24, &mut rng);
        let x: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let label = if k % 2 == 0 {
            Label::Positive
        } else {
            Label::Negative
        };
        worst = worst
            .max(gradient_check(&m, &PairFeature { values: x, label }).map_err(|e| e.to_string())?);
    }
    check(worst < GRAD_TOL, || {
        format!("gradient check max relative error {worst:e}")
    })?;
    let took = within(Duration::from_secs(120), start)?;
    Ok(format!(
        "blob accuracy {acc:.4}, shuffled-label accuracy {null_acc:.4}, random-model gradient error {worst:.2e} ({took})"
    ))
}

// ---------------------------------------------------------------- 6

fn avg_phrase_rs(path: &Path, layers: usize) -> Result<Vec<f64>, String> {
    let grid = load_metric_grid(path).map_err(|e| e.to_string())?;
    (0..layers)
        .map(|l| {
            grid.get(l, ReprType::AvgPhrase)
                .and_then(|c| c.value)
                .ok_or_else(|| format!("layer {l} avg-phrase undefined"))
        })
        .collect()
}

fn synthetic_contrast() -> Outcome {
    let layout = Layout::default();
    let fx = correlation_contrast(BIRD_FULL - ABBA_EXPECTED, ABBA_EXPECTED, layout, 42);
    let abba = filter_abba(&fx.items);
    check(abba.len() == ABBA_EXPECTED, || {
        format!("fixture has {} AB-BA items", abba.len())
    })?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dump_path = dir.path().join("contrast.bin");
    write(&fx.dump, &dump_path).map_err(|e| e.to_string())?;
    let data = dir.path().join("similarity.jsonl");
    let records: Vec<_> = fx
        .items
        .iter()
        .map(|it| {
            it.to_record(if is_abba(it) {
                Subset::Abba
            } else {
                Subset::Full
            })
        })
        .collect();
    write_jsonl(&records, &data).map_err(|e| e.to_string())?;

    let mut rs = Vec::new();
    for subset in [Subset::Full, Subset::Abba] {
        let mut cfg = RunConfig::new(vec![dump_path.clone()], dir.path().join("out"));
        cfg.similarity = Some(data.clone());
        cfg.subset = subset;
        let out = cmd_analyze(&cfg).map_err(|e| e.to_string())?;
        let (_, json) = out.correlation.ok_or("no correlation report")?;
        rs.push(avg_phrase_rs(&json, layout.num_layers)?);
    }
    let (full, abba) = (&rs[0], &rs[1]);
    check(full.iter().all(|&r| r > CONTRAST_FULL_MIN), || {
        format!("full-set r {full:?}")
    })?;
    check(abba.iter().all(|&r| r.abs() < CONTRAST_ABBA_MAX), || {
        format!("AB-BA r {abba:?}")
    })?;
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|r| format!("{r:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    Ok(format!(
        "avg-phrase r per layer: full [{}], AB-BA [{}]",
        fmt(full),
        fmt(abba)
    ))
}

// ---------------------------------------------------------------- 7

fn landmark_items() -> Vec<LandmarkItem> {
    let mut items =
        load_landmark_items(&workspace_root().join("data/landmarks/kintsch_ran.jsonl")).unwrap();
    let verbs = ["ran", "struck", "surrendered", "collapsed"];
    for (v, verb) in verbs.iter().enumerate() {
        for k in 0..4 {
            items.push(
                LandmarkItem::new(
                    &format!("syn-{v}-{k}"),
                    &format!("subject{k} {verb}"),
                    &format!("sense{v}a{k}"),
                    &format!("sense{v}b{k}"),
                )
                .unwrap(),
            );
        }
    }
    items
}

fn landmark_properties() -> Outcome {
    let items = landmark_items();
    let layout = Layout::default();
    let reprs = ReprType::ALL;

    let dump = landmark_dump(&items, LandmarkMode::PhraseEqualsPositive, layout, 5);
    let grid = landmark_eval(&dump, &items, &reprs).map_err(|e| e.to_string())?;
    for c in &grid.cells {
        check(
            c.fraction == Some(1.0) && c.n_decided == items.len(),
            || format!("layer {} {}: {:?}", c.layer, c.repr, c),
        )?;
    }

    let flat = landmark_dump(&items, LandmarkMode::Constant, layout, 5);
    let grid = landmark_eval(&flat, &items, &reprs).map_err(|e| e.to_string())?;
    for c in &grid.cells {
        check(
            c.missing && c.fraction.is_none() && c.n_decided == 0 && c.n_undecided == items.len(),
            || format!("layer {} {}: {:?}", c.layer, c.repr, c),
        )?;
    }
    Ok(format!(
        "{} items x {} layers x {} reprs: all correct on the copy dump, all missing on the constant dump",
        items.len(),
        layout.num_layers,
        reprs.len()
    ))
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 7] = [
        ("format round-trip", format_round_trip),
        ("pooling oracle", pooling_oracle),
        ("pearson/cosine oracles", statistic_oracles),
        ("filter invariants", filter_invariants),
        ("classifier sanity", classifier_sanity),
        ("end-to-end synthetic contrast", synthetic_contrast),
        ("landmark properties", landmark_properties),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
