//! Paraphrase probe: a one-hidden-layer ReLU network with a two-way softmax
//! over concatenated source/target phrase vectors, trained per
//! (layer, representation) cell.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, ParaphraseItem};
use crate::error::{ProbeError, Result};
use crate::grid::{cell_coords, fmt_opt, MetricCell, MetricGrid};
use crate::pooling::{pool_pair, ReprType};
use crate::similarity::{resolve_pairs, warn_head_fallback};
use crate::store::Dump;

pub const DEFAULT_HIDDEN: usize = 256;
const NUM_CLASSES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub hidden: usize,
    /// Standardise each input feature with training-set mean and deviation.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            epochs: 30,
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            hidden: DEFAULT_HIDDEN,
            standardize: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epochs > 0
            && self.batch_size > 0
            && self.hidden > 0
            && self.learning_rate > 0.0
            && self.epsilon > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2);
        if ok {
            Ok(())
        } else {
            Err(ProbeError::Config(format!(
                "invalid training config {self:?}"
            )))
        }
    }
}

/// Concatenated `[source; target]` pooled vectors with their label.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFeature {
    pub values: Vec<f64>,
    pub label: Label,
}

impl PairFeature {
    pub fn concat(source: &[f32], target: &[f32], label: Label) -> Self {
        let values = source.iter().chain(target).map(|&v| v as f64).collect();
        Self { values, label }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    fn fit(x: &Array2<f64>) -> Self {
        let mean = x.mean_axis(Axis(0)).unwrap();
        let var = x.var_axis(Axis(0), 0.0);
        let scale = var
            .iter()
            .map(|&v| if v > 0.0 { v.sqrt() } else { 1.0 })
            .collect();
        Self {
            mean: mean.to_vec(),
            scale,
        }
    }

    fn apply(&self, x: &mut Array2<f64>) {
        for mut row in x.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    /// Mean cross-entropy of each epoch's mini-batches.
    pub epoch_losses: Vec<f64>,
    pub final_train_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    /// hidden x input
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// 2 x hidden
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub standardizer: Option<Standardizer>,
    pub meta: Option<TrainingMeta>,
}

/// Gradients with the same shapes as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl ClassifierModel {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            w1: Array2::zeros((hidden, input_dim)),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((NUM_CLASSES, hidden)),
            b2: Array1::zeros(NUM_CLASSES),
            standardizer: None,
            meta: None,
        }
    }

    /// Weights and biases uniform in `+-1/sqrt(fan_in)` per layer.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut m = Self::zeros(input_dim, hidden);
        let b1 = 1.0 / (input_dim as f64).sqrt();
        let b2 = 1.0 / (hidden as f64).sqrt();
        m.w1.mapv_inplace(|_| rng.random_range(-b1..b1));
        m.b1.mapv_inplace(|_| rng.random_range(-b1..b1));
        m.w2.mapv_inplace(|_| rng.random_range(-b2..b2));
        m.b2.mapv_inplace(|_| rng.random_range(-b2..b2));
        m
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden(&self) -> usize {
        self.w1.nrows()
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim() {
            return Err(ProbeError::DimensionMismatch {
                left: self.input_dim(),
                right: len,
            });
        }
        Ok(())
    }

    fn prepare(&self, x: &[f64]) -> Array1<f64> {
        let mut v = Array1::from(x.to_vec());
        if let Some(s) = &self.standardizer {
            for ((v, m), sc) in v.iter_mut().zip(&s.mean).zip(&s.scale) {
                *v = (*v - m) / sc;
            }
        }
        v
    }

    fn logits(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let hidden = (x.dot(&self.w1.t()) + &self.b1).mapv(relu);
        hidden.dot(&self.w2.t()) + &self.b2
    }

    /// Row-wise class probabilities of an already-standardised batch.
    fn probabilities(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut logits = self.logits(x);
        for mut row in logits.rows_mut() {
            softmax_inplace(row.view_mut());
        }
        logits
    }

    /// Parameters as little-endian `f32`: magic `PHRPMLP1`, input width,
    /// hidden width and class count as `u32`, then W1, b1, W2, b2 in
    /// row-major order.
    pub fn params_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"PHRPMLP1");
        for n in [self.input_dim(), self.hidden(), NUM_CLASSES] {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for v in self
            .w1
            .iter()
            .chain(self.b1.iter())
            .chain(self.w2.iter())
            .chain(self.b2.iter())
        {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    pub fn write_params(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.params_bytes()).map_err(|e| ProbeError::io(path, e))
    }
}

fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// `-ln softmax(z)[y]` evaluated as log-sum-exp minus the target logit, so
/// confident predictions keep their precision.
fn cross_entropy(z: ndarray::ArrayView1<f64>, y: usize) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln() - z[y]
}

fn softmax_inplace(mut z: ndarray::ArrayViewMut1<f64>) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Class probabilities `(negative, positive)` for one feature vector.
pub fn forward(model: &ClassifierModel, feature: &PairFeature) -> Result<[f64; 2]> {
    model.check_input(feature.values.len())?;
    let x = model.prepare(&feature.values);
    let p = model.probabilities(x.view().insert_axis(Axis(0)));
    Ok([p[[0, 0]], p[[0, 1]]])
}

/// Positive only when its probability strictly exceeds the negative's.
pub fn predict(probs: [f64; 2]) -> Label {
    if probs[1] > probs[0] {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Mean cross-entropy and its gradients over a standardised batch.
fn batch_gradients(
    model: &ClassifierModel,
    x: ArrayView2<f64>,
    labels: ArrayView1<usize>,
) -> (f64, Gradients) {
    let b = x.nrows() as f64;
    let z1 = x.dot(&model.w1.t()) + &model.b1;
    let a1 = z1.mapv(relu);
    let mut p = a1.dot(&model.w2.t()) + &model.b2;
    let mut loss = 0.0;
    for (mut row, &y) in p.rows_mut().into_iter().zip(labels) {
        loss += cross_entropy(row.view(), y);
        softmax_inplace(row.view_mut());
        row[y] -= 1.0;
    }
    let dz2 = p / b;
    let w2 = dz2.t().dot(&a1).as_standard_layout().into_owned();
    let b2 = dz2.sum_axis(Axis(0));
    let mut dz1 = dz2.dot(&model.w2);
    dz1.zip_mut_with(&z1, |g, &z| {
        if z <= 0.0 {
            *g = 0.0
        }
    });
    let w1 = dz1.t().dot(&x).as_standard_layout().into_owned();
    let b1 = dz1.sum_axis(Axis(0));
    (loss / b, Gradients { w1, b1, w2, b2 })
}

/// Analytic gradient of the single-example cross-entropy.
pub fn gradients(model: &ClassifierModel, feature: &PairFeature) -> Result<(f64, Gradients)> {
    model.check_input(feature.values.len())?;
    let x = model.prepare(&feature.values).insert_axis(Axis(0));
    let y = Array1::from(vec![feature.label.index()]);
    Ok(batch_gradients(model, x.view(), y.view()))
}

/// Single-example cross-entropy.
pub fn loss(model: &ClassifierModel, feature: &PairFeature) -> Result<f64> {
    model.check_input(feature.values.len())?;
    let x = model.prepare(&feature.values);
    let z = model.logits(x.view().insert_axis(Axis(0)));
    Ok(cross_entropy(z.row(0), feature.label.index()))
}

struct Adam {
    m: Gradients,
    v: Gradients,
    step: i32,
}

impl Adam {
    fn new(model: &ClassifierModel) -> Self {
        let zeros = Gradients {
            w1: Array2::zeros(model.w1.raw_dim()),
            b1: Array1::zeros(model.b1.raw_dim()),
            w2: Array2::zeros(model.w2.raw_dim()),
            b2: Array1::zeros(model.b2.raw_dim()),
        };
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    fn update(&mut self, model: &mut ClassifierModel, g: &Gradients, cfg: &TrainConfig) {
        self.step += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.step);
        let c2 = 1.0 - cfg.beta2.powi(self.step);
        let lr = cfg.learning_rate;
        let (b1, b2, eps) = (cfg.beta1, cfg.beta2, cfg.epsilon);
        let apply = |p: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64]| {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= lr * mh / (vh.sqrt() + eps);
            }
        };
        apply(
            model.w1.as_slice_mut().unwrap(),
            self.m.w1.as_slice_mut().unwrap(),
            self.v.w1.as_slice_mut().unwrap(),
            g.w1.as_slice().unwrap(),
        );
        apply(
            model.b1.as_slice_mut().unwrap(),
            self.m.b1.as_slice_mut().unwrap(),
            self.v.b1.as_slice_mut().unwrap(),
            g.b1.as_slice().unwrap(),
        );
        apply(
            model.w2.as_slice_mut().unwrap(),
            self.m.w2.as_slice_mut().unwrap(),
            self.v.w2.as_slice_mut().unwrap(),
            g.w2.as_slice().unwrap(),
        );
        apply(
            model.b2.as_slice_mut().unwrap(),
            self.m.b2.as_slice_mut().unwrap(),
            self.v.b2.as_slice_mut().unwrap(),
            g.b2.as_slice().unwrap(),
        );
    }
}

fn feature_matrix(features: &[PairFeature]) -> Result<(Array2<f64>, Array1<usize>)> {
    let dim = features.first().map_or(0, |f| f.values.len());
    let mut x = Array2::zeros((features.len(), dim));
    for (mut row, f) in x.rows_mut().into_iter().zip(features) {
        if f.values.len() != dim {
            return Err(ProbeError::DimensionMismatch {
                left: dim,
                right: f.values.len(),
            });
        }
        row.assign(&ArrayView1::from(&f.values));
    }
    let y = features.iter().map(|f| f.label.index()).collect();
    Ok((x, y))
}

/// Mini-batch Adam on cross-entropy for a fixed number of epochs.
///
/// Deterministic in `(features, config)`: initialisation and the per-epoch
/// shuffles draw from one generator seeded with `config.seed`.
pub fn train(features: &[PairFeature], config: &TrainConfig) -> Result<ClassifierModel> {
    config.validate()?;
    let n_pos = features
        .iter()
        .filter(|f| f.label == Label::Positive)
        .count();
    let n_neg = features.len() - n_pos;
    if n_pos == 0 {
        return Err(ProbeError::MissingClass("positive"));
    }
    if n_neg == 0 {
        return Err(ProbeError::MissingClass("negative"));
    }
    let (mut x, y) = feature_matrix(features)?;
    let standardizer = config.standardize.then(|| Standardizer::fit(&x));
    if let Some(s) = &standardizer {
        s.apply(&mut x);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = ClassifierModel::init(x.ncols(), config.hidden, &mut rng);
    let mut adam = Adam::new(&model);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let xb = x.select(Axis(0), chunk);
            let yb: Array1<usize> = chunk.iter().map(|&i| y[i]).collect();
            let (l, g) = batch_gradients(&model, xb.view(), yb.view());
            total += l * chunk.len() as f64;
            adam.update(&mut model, &g, config);
        }
        epoch_losses.push(total / x.nrows() as f64);
    }

    model.standardizer = standardizer;
    model.meta = Some(TrainingMeta {
        seed: config.seed,
        epochs: config.epochs,
        final_train_loss: *epoch_losses.last().unwrap(),
        epoch_losses,
    });
    Ok(model)
}

/// Fraction of examples whose predicted label matches.
pub fn evaluate(model: &ClassifierModel, features: &[PairFeature]) -> Result<f64> {
    if features.is_empty() {
        return Err(ProbeError::TooFewItems { needed: 1, got: 0 });
    }
    let (mut x, y) = feature_matrix(features)?;
    model.check_input(x.ncols())?;
    if let Some(s) = &model.standardizer {
        s.apply(&mut x);
    }
    let p = model.probabilities(x.view());
    let correct = p
        .rows()
        .into_iter()
        .zip(&y)
        .filter(|(row, &label)| predict([row[0], row[1]]).index() == label)
        .count();
    Ok(correct as f64 / features.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamTensor {
    W1,
    B1,
    W2,
    B2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckEntry {
    pub tensor: ParamTensor,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub max_relative_error: f64,
}

/// Finite-difference step.
pub const GRAD_CHECK_STEP: f64 = 1e-5;
/// Magnitude below which a gradient counts as zero in the relative error.
pub const GRAD_CHECK_FLOOR: f64 = 1e-8;
const GRAD_CHECK_SAMPLES: usize = 24;

fn tensor_mut(m: &mut ClassifierModel, t: ParamTensor) -> &mut [f64] {
    match t {
        ParamTensor::W1 => m.w1.as_slice_mut().unwrap(),
        ParamTensor::B1 => m.b1.as_slice_mut().unwrap(),
        ParamTensor::W2 => m.w2.as_slice_mut().unwrap(),
        ParamTensor::B2 => m.b2.as_slice_mut().unwrap(),
    }
}

fn tensor(g: &Gradients, t: ParamTensor) -> &[f64] {
    match t {
        ParamTensor::W1 => g.w1.as_slice().unwrap(),
        ParamTensor::B1 => g.b1.as_slice().unwrap(),
        ParamTensor::W2 => g.w2.as_slice().unwrap(),
        ParamTensor::B2 => g.b2.as_slice().unwrap(),
    }
}

/// Compare the supplied analytic gradient against central differences on a
/// seeded sample of parameters (up to 24 per tensor).
///
/// Relative error is `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn gradient_check_with(
    model: &ClassifierModel,
    feature: &PairFeature,
    analytic: &Gradients,
) -> Result<GradCheckReport> {
    let mut probe = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6772_6164);
    let mut entries = Vec::new();
    for t in [
        ParamTensor::W1,
        ParamTensor::B1,
        ParamTensor::W2,
        ParamTensor::B2,
    ] {
        let len = tensor(analytic, t).len();
        let picks: Vec<usize> = if len <= GRAD_CHECK_SAMPLES {
            (0..len).collect()
        } else {
            rand::seq::index::sample(&mut rng, len, GRAD_CHECK_SAMPLES).into_vec()
        };
        for i in picks {
            let orig = tensor_mut(&mut probe, t)[i];
            tensor_mut(&mut probe, t)[i] = orig + GRAD_CHECK_STEP;
            let up = loss(&probe, feature)?;
            tensor_mut(&mut probe, t)[i] = orig - GRAD_CHECK_STEP;
            let down = loss(&probe, feature)?;
            tensor_mut(&mut probe, t)[i] = orig;
            let numeric = (up - down) / (2.0 * GRAD_CHECK_STEP);
            let a = tensor(analytic, t)[i];
            let relative_error =
                (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
            entries.push(GradCheckEntry {
                tensor: t,
                index: i,
                analytic: a,
                numeric,
                relative_error,
            });
        }
    }
    let max_relative_error = entries.iter().map(|e| e.relative_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        entries,
        max_relative_error,
    })
}

/// Check backpropagation against central finite differences; returns the
/// maximum relative error.
pub fn gradient_check(model: &ClassifierModel, feature: &PairFeature) -> Result<f64> {
    let (_, g) = gradients(model, feature)?;
    Ok(gradient_check_with(model, feature, &g)?.max_relative_error)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationCell {
    pub layer: usize,
    pub repr: ReprType,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_train_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationGrid {
    pub num_layers: usize,
    pub reprs: Vec<ReprType>,
    pub cells: Vec<ClassificationCell>,
}

impl ClassificationGrid {
    pub fn get(&self, layer: usize, repr: ReprType) -> Option<&ClassificationCell> {
        let col = self.reprs.iter().position(|&r| r == repr)?;
        self.cells.get(layer * self.reprs.len() + col)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,repr,n_train,n_test,accuracy\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.layer,
                c.repr,
                c.n_train,
                c.n_test,
                fmt_opt(c.accuracy)
            );
        }
        out
    }

    pub fn to_metric_grid(&self) -> MetricGrid {
        MetricGrid {
            metric: "accuracy".into(),
            num_layers: self.num_layers,
            reprs: self.reprs.clone(),
            cells: self
                .cells
                .iter()
                .map(|c| MetricCell {
                    layer: c.layer,
                    repr: c.repr,
                    value: c.accuracy,
                    reason: c.reason.clone(),
                })
                .collect(),
        }
    }
}

/// Pooled pair features of resolved items at one (layer, repr).
pub fn pair_features(
    dump: &Dump,
    pairs: &[(u64, u64)],
    labels: &[Label],
    layer: usize,
    repr: ReprType,
) -> Result<Vec<PairFeature>> {
    pairs
        .iter()
        .zip(labels)
        .map(|(&(s, t), &label)| {
            let missing = |id| ProbeError::Unresolved(vec![format!("record {id}")]);
            let sv = dump.view(s).ok_or_else(|| missing(s))?;
            let tv = dump.view(t).ok_or_else(|| missing(t))?;
            let (p, q) = pool_pair(&sv, &tv, layer, repr)?;
            Ok(PairFeature::concat(&p.values, &q.values, label))
        })
        .collect()
}

type ResolvedItems = (Vec<(u64, u64)>, Vec<Label>);

fn resolve_items(dump: &Dump, items: &[ParaphraseItem]) -> Result<ResolvedItems> {
    let pairs = resolve_pairs(
        dump,
        items
            .iter()
            .map(|i| (i.item_id.as_str(), i.source.as_slice(), i.target.as_slice())),
    )?;
    Ok((pairs, items.iter().map(|i| i.label).collect()))
}

/// Train on `train` items and return the model for one (layer, repr) cell.
pub fn train_cell(
    dump: &Dump,
    train_items: &[ParaphraseItem],
    layer: usize,
    repr: ReprType,
    config: &TrainConfig,
) -> Result<ClassifierModel> {
    let (pairs, labels) = resolve_items(dump, train_items)?;
    train(&pair_features(dump, &pairs, &labels, layer, repr)?, config)
}

pub fn evaluate_cell(
    model: &ClassifierModel,
    dump: &Dump,
    test_items: &[ParaphraseItem],
    layer: usize,
    repr: ReprType,
) -> Result<f64> {
    let (pairs, labels) = resolve_items(dump, test_items)?;
    evaluate(model, &pair_features(dump, &pairs, &labels, layer, repr)?)
}

/// Train and test an independent probe in every (layer, repr) cell.
///
/// Every cell uses the same seed. Cells whose features cannot be pooled are
/// undefined with a logged reason; data errors (unresolved items, a missing
/// class) abort the sweep.
pub fn classification_sweep(
    dump: &Dump,
    train_items: &[ParaphraseItem],
    test_items: &[ParaphraseItem],
    reprs: &[ReprType],
    config: &TrainConfig,
) -> Result<ClassificationGrid> {
    Ok(sweep(dump, train_items, test_items, reprs, config, false)?.0)
}

/// [`classification_sweep`] that also returns each cell's trained model, in
/// grid order (`None` for undefined cells).
pub fn classification_sweep_with_models(
    dump: &Dump,
    train_items: &[ParaphraseItem],
    test_items: &[ParaphraseItem],
    reprs: &[ReprType],
    config: &TrainConfig,
) -> Result<(ClassificationGrid, Vec<Option<ClassifierModel>>)> {
    sweep(dump, train_items, test_items, reprs, config, true)
}

fn sweep(
    dump: &Dump,
    train_items: &[ParaphraseItem],
    test_items: &[ParaphraseItem],
    reprs: &[ReprType],
    config: &TrainConfig,
    keep_models: bool,
) -> Result<(ClassificationGrid, Vec<Option<ClassifierModel>>)> {
    config.validate()?;
    let (train_pairs, train_labels) = resolve_items(dump, train_items)?;
    let (test_pairs, test_labels) = resolve_items(dump, test_items)?;
    if test_pairs.is_empty() {
        return Err(ProbeError::TooFewItems { needed: 1, got: 0 });
    }
    for (label, name) in [(Label::Positive, "positive"), (Label::Negative, "negative")] {
        if !train_labels.contains(&label) {
            return Err(ProbeError::MissingClass(name));
        }
    }
    warn_head_fallback(
        dump,
        train_pairs
            .iter()
            .chain(&test_pairs)
            .flat_map(|&(s, t)| [s, t]),
        reprs,
    );

    let results: Vec<Result<(ClassificationCell, Option<ClassifierModel>)>> =
        cell_coords(dump.num_layers(), reprs)
            .into_par_iter()
            .map(|(layer, repr)| {
                let mut cell = ClassificationCell {
                    layer,
                    repr,
                    n_train: train_pairs.len(),
                    n_test: test_pairs.len(),
                    accuracy: None,
                    final_train_loss: None,
                    reason: None,
                };
                let features = pair_features(dump, &train_pairs, &train_labels, layer, repr)
                    .and_then(|tr| {
                        pair_features(dump, &test_pairs, &test_labels, layer, repr)
                            .map(|te| (tr, te))
                    });
                match features {
                    Ok((tr, te)) => {
                        let model = train(&tr, config)?;
                        cell.accuracy = Some(evaluate(&model, &te)?);
                        cell.final_train_loss = model.meta.as_ref().map(|m| m.final_train_loss);
                        Ok((cell, keep_models.then_some(model)))
                    }
                    Err(e) => {
                        log::warn!("classification layer {layer} {repr} undefined: {e}");
                        cell.reason = Some(e.to_string());
                        Ok((cell, None))
                    }
                }
            })
            .collect();
    let (cells, models) = results
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok((
        ClassificationGrid {
            num_layers: dump.num_layers(),
            reprs: reprs.to_vec(),
            cells,
        },
        models,
    ))
}
