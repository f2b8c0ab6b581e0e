//! Mini-batch RMSprop training with seeded shuffling, inverted dropout,
//! divergence detection, and per-epoch loss + neighborhood-overlap traces.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::paired::PairedDataset;
use crate::error::{Error, Result};
use crate::loss::{evaluate_loss, LossKind, MarginContext};
use crate::model::{backprop_into, forward, ForwardTrace, Gradients, MappingModel};
use crate::neighborhood::{mean_overlap_over, top_k_neighbors};
use crate::optim::{rmsprop_update, RmspropState};
use crate::scalar::{cast, cast_usize, to_f64, Scalar};
use crate::similarity::SimilarityMeasure;

/// Loss above which a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Where test-side neighborhoods are computed: within the test set alone, or
/// within the pooled train+test set (averaging over test items only).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapScope {
    TestOnly,
    Pooled,
}

impl fmt::Display for OverlapScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OverlapScope::TestOnly => write!(f, "test_only"),
            OverlapScope::Pooled => write!(f, "pooled"),
        }
    }
}

impl FromStr for OverlapScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "test_only" => Ok(OverlapScope::TestOnly),
            "pooled" => Ok(OverlapScope::Pooled),
            other => Err(Error::InvalidArgument(format!(
                "unknown overlap scope `{other}` (expected test_only or pooled)"
            ))),
        }
    }
}

/// Full training recipe. All stochastic choices (shuffling, dropout) derive
/// from `seed`, so a config determines a run exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub loss: LossKind,
    /// Margin γ; read only by the max-margin loss.
    pub margin: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Inverted-dropout probability on hidden activations, train time only.
    pub dropout: f64,
    pub rmsprop_rho: f64,
    pub rmsprop_eps: f64,
    pub seed: u64,
    pub neighbor_k: usize,
    pub neighbor_measure: SimilarityMeasure,
    /// Record overlap traces every this many epochs (plus the final epoch);
    /// 0 disables them entirely. Skipped epochs store NaN.
    pub mnno_every: usize,
    pub overlap_scope: OverlapScope,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossKind::Mse,
            margin: 1.0,
            learning_rate: 0.001,
            batch_size: 64,
            epochs: 100,
            dropout: 0.0,
            rmsprop_rho: 0.9,
            rmsprop_eps: 1e-8,
            seed: 0,
            neighbor_k: 10,
            neighbor_measure: SimilarityMeasure::Cosine,
            mnno_every: 1,
            overlap_scope: OverlapScope::TestOnly,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        if self.margin < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "margin must be non-negative, got {}",
                self.margin
            )));
        }
        if !(0.0..1.0).contains(&self.rmsprop_rho) {
            return Err(Error::InvalidArgument(format!(
                "rmsprop rho must lie in [0, 1), got {}",
                self.rmsprop_rho
            )));
        }
        if !(self.rmsprop_eps > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rmsprop eps must be positive, got {}",
                self.rmsprop_eps
            )));
        }
        if self.neighbor_k == 0 {
            return Err(Error::InvalidArgument("neighbor k must be positive".into()));
        }
        Ok(())
    }
}

/// One completed epoch. Overlap fields are NaN when not scheduled or not
/// computable (set too small, or a zero vector under cosine neighbors).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    /// mNNO(X, f(X)) on the training set.
    pub mnno_x_train: f64,
    /// mNNO(X, f(X)) on the test side.
    pub mnno_x_test: f64,
    /// mNNO(Y, f(X)) on the training set.
    pub mnno_y_train: f64,
    /// mNNO(Y, f(X)) on the test side.
    pub mnno_y_test: f64,
}

/// Per-epoch training traces.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn final_record(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("epoch,train_loss,test_loss,mnno_x_train,mnno_x_test,mnno_y_train,mnno_y_test\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.epoch,
                r.train_loss,
                r.test_loss,
                r.mnno_x_train,
                r.mnno_x_test,
                r.mnno_y_train,
                r.mnno_y_test
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(self.to_csv().as_bytes())
            .map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// First item in batch order whose label differs from item i's and that
/// violates the margin: `γ + ‖pred_i − y_i‖ − ‖pred_j − y_i‖ > 0`.
pub fn select_negative<S: Scalar>(
    preds: &[&[S]],
    targets: &[&[S]],
    labels: &[&str],
    i: usize,
    margin: f64,
) -> Option<usize> {
    let pos_dist = crate::similarity::euclidean_distance(preds[i], targets[i]);
    let slack = cast::<S>(margin) + pos_dist;
    (0..preds.len()).find(|&j| {
        labels[j] != labels[i]
            && slack - crate::similarity::euclidean_distance(preds[j], targets[i]) > S::zero()
    })
}

/// Evaluation-mode mean loss over a whole dataset (no dropout). For the
/// max-margin loss the first-violator scan runs over the full dataset in
/// key order.
pub fn evaluate_dataset_loss<S: Scalar>(
    model: &MappingModel<S>,
    dataset: &PairedDataset<S>,
    loss: LossKind,
    margin: f64,
) -> Result<f64> {
    let n = dataset.len();
    let mut preds: Vec<Vec<S>> = Vec::with_capacity(n);
    for i in 0..n {
        preds.push(model.forward_item(dataset.x().vector(i))?);
    }
    let mut total = 0.0;
    match loss {
        LossKind::Mse | LossKind::Cosine => {
            for i in 0..n {
                let e = evaluate_loss(loss, &preds[i], dataset.y().vector(i), None)?;
                total += to_f64(e.value);
            }
        }
        LossKind::MaxMargin => {
            let labels = dataset.labels().ok_or_else(|| {
                Error::InvalidArgument(
                    "max_margin loss requires class labels; use mse or cosine for unlabeled data"
                        .into(),
                )
            })?;
            let pred_slices: Vec<&[S]> = preds.iter().map(Vec::as_slice).collect();
            let targets: Vec<&[S]> = (0..n).map(|i| dataset.y().vector(i)).collect();
            let label_slices: Vec<&str> = labels.iter().map(String::as_str).collect();
            for i in 0..n {
                if let Some(j) = select_negative(&pred_slices, &targets, &label_slices, i, margin)
                {
                    let ctx = MarginContext {
                        neg_pred: pred_slices[j],
                        margin,
                    };
                    let e = evaluate_loss(loss, pred_slices[i], targets[i], Some(ctx))?;
                    total += to_f64(e.value);
                }
            }
        }
    }
    Ok(total / n as f64)
}

fn draw_masks<S: Scalar>(
    model: &MappingModel<S>,
    dropout: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<S>> {
    let keep = 1.0 - dropout;
    let scale = cast::<S>(1.0 / keep);
    model
        .hidden_dims()
        .iter()
        .map(|&width| {
            (0..width)
                .map(|_| {
                    if rng.random::<f64>() < keep {
                        scale
                    } else {
                        S::zero()
                    }
                })
                .collect()
        })
        .collect()
}

fn train_batch<S: Scalar>(
    model: &mut MappingModel<S>,
    state: &mut RmspropState<S>,
    train_set: &PairedDataset<S>,
    batch: &[usize],
    config: &TrainConfig,
    epoch: usize,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let b = batch.len();
    let masks: Option<Vec<Vec<Vec<S>>>> = if config.dropout > 0.0 && model.n_hidden() > 0 {
        Some(
            (0..b)
                .map(|_| draw_masks(model, config.dropout, rng))
                .collect(),
        )
    } else {
        None
    };
    let mut traces: Vec<ForwardTrace<S>> = Vec::with_capacity(b);
    for (slot, &i) in batch.iter().enumerate() {
        let slot_masks = masks.as_ref().map(|m| m[slot].as_slice());
        traces.push(model.forward_trace(train_set.x().vector(i), slot_masks)?);
    }
    let pred_slices: Vec<&[S]> = traces.iter().map(|t| t.output.as_slice()).collect();
    let targets: Vec<&[S]> = batch.iter().map(|&i| train_set.y().vector(i)).collect();

    let mut upstreams: Vec<Vec<S>> = vec![vec![S::zero(); model.d_out()]; b];
    let mut total = S::zero();
    match config.loss {
        LossKind::Mse | LossKind::Cosine => {
            for slot in 0..b {
                let e = evaluate_loss(config.loss, pred_slices[slot], targets[slot], None)?;
                total += e.value;
                upstreams[slot] = e.upstream;
            }
        }
        LossKind::MaxMargin => {
            let labels: Vec<&str> = batch
                .iter()
                .map(|&i| train_set.label(i).expect("label presence checked by train"))
                .collect();
            for slot in 0..b {
                if let Some(neg) =
                    select_negative(&pred_slices, &targets, &labels, slot, config.margin)
                {
                    let ctx = MarginContext {
                        neg_pred: pred_slices[neg],
                        margin: config.margin,
                    };
                    let e =
                        evaluate_loss(config.loss, pred_slices[slot], targets[slot], Some(ctx))?;
                    total += e.value;
                    for (u, g) in upstreams[slot].iter_mut().zip(&e.upstream) {
                        *u += *g;
                    }
                    let neg_up = e.neg_upstream.expect("max_margin always returns one");
                    for (u, g) in upstreams[neg].iter_mut().zip(&neg_up) {
                        *u += *g;
                    }
                }
            }
        }
    }
    let batch_loss = to_f64(total) / b as f64;
    if !batch_loss.is_finite() || batch_loss > DIVERGENCE_LIMIT {
        return Err(Error::Diverged {
            epoch: epoch + 1,
            loss: batch_loss,
        });
    }

    let mut grads = Gradients::zeros_like(model);
    for slot in 0..b {
        if upstreams[slot].iter().all(|&u| u == S::zero()) {
            continue;
        }
        let slot_masks = masks.as_ref().map(|m| m[slot].as_slice());
        backprop_into(model, &traces[slot], slot_masks, &upstreams[slot], &mut grads)?;
    }
    grads.scale(S::one() / cast_usize(b));
    rmsprop_update(
        model,
        &grads,
        state,
        config.learning_rate,
        config.rmsprop_rho,
        config.rmsprop_eps,
    )
}

/// Overlap metric pair for one side. Returns NaN when the set is too small
/// or a zero vector makes cosine neighborhoods undefined.
fn overlap_or_nan<S: Scalar>(
    a: &crate::data::vector_set::VectorSet<S>,
    b: &crate::data::vector_set::VectorSet<S>,
    k: usize,
    measure: SimilarityMeasure,
) -> Result<f64> {
    if a.len() < 2 {
        return Ok(f64::NAN);
    }
    match crate::neighborhood::mean_nn_overlap(a, b, k, measure) {
        Ok(v) => Ok(v),
        Err(Error::ZeroVector { .. }) => Ok(f64::NAN),
        Err(e) => Err(e),
    }
}

fn overlap_metrics<S: Scalar>(
    model: &MappingModel<S>,
    train_set: &PairedDataset<S>,
    test_set: &PairedDataset<S>,
    config: &TrainConfig,
) -> Result<(f64, f64, f64, f64)> {
    let k = config.neighbor_k;
    let m = config.neighbor_measure;
    let f_train = forward(model, train_set.x())?;
    let mnno_x_train = overlap_or_nan(train_set.x(), &f_train, k, m)?;
    let mnno_y_train = overlap_or_nan(train_set.y(), &f_train, k, m)?;
    let f_test = forward(model, test_set.x())?;
    let (mnno_x_test, mnno_y_test) = match config.overlap_scope {
        OverlapScope::TestOnly => (
            overlap_or_nan(test_set.x(), &f_test, k, m)?,
            overlap_or_nan(test_set.y(), &f_test, k, m)?,
        ),
        OverlapScope::Pooled => {
            let pooled_x = train_set.x().concat(test_set.x())?;
            let pooled_y = train_set.y().concat(test_set.y())?;
            let pooled_f = f_train.concat(&f_test)?;
            let items: Vec<usize> = (train_set.len()..pooled_x.len()).collect();
            let pooled = (|| -> Result<(f64, f64)> {
                let nx = top_k_neighbors(&pooled_x, k, m)?;
                let ny = top_k_neighbors(&pooled_y, k, m)?;
                let nf = top_k_neighbors(&pooled_f, k, m)?;
                Ok((
                    mean_overlap_over(&nx, &nf, &items)?,
                    mean_overlap_over(&ny, &nf, &items)?,
                ))
            })();
            match pooled {
                Ok(pair) => pair,
                Err(Error::ZeroVector { .. }) => (f64::NAN, f64::NAN),
                Err(e) => return Err(e),
            }
        }
    };
    Ok((mnno_x_train, mnno_x_test, mnno_y_train, mnno_y_test))
}

/// Trains `model` on `train_set`, evaluating on `test_set` after every
/// epoch. Deterministic given `config.seed`: the training order is
/// reshuffled each epoch and dropout masks are drawn from the same stream.
///
/// Losses in the history are evaluation-mode values computed after the
/// epoch's updates. Returns an error carrying the epoch number if the loss
/// becomes non-finite or exceeds [`DIVERGENCE_LIMIT`].
pub fn train<S: Scalar>(
    model: MappingModel<S>,
    train_set: &PairedDataset<S>,
    test_set: &PairedDataset<S>,
    config: &TrainConfig,
) -> Result<(MappingModel<S>, TrainHistory)> {
    config.validate()?;
    let mut model = model;
    for (set, name) in [(train_set, "training"), (test_set, "test")] {
        if set.x().dim() != model.d_in() {
            return Err(Error::DimensionMismatch {
                expected: model.d_in(),
                got: set.x().dim(),
                context: format!("{name} inputs vs model"),
            });
        }
        if set.y().dim() != model.d_out() {
            return Err(Error::DimensionMismatch {
                expected: model.d_out(),
                got: set.y().dim(),
                context: format!("{name} targets vs model"),
            });
        }
        if config.loss == LossKind::MaxMargin && set.labels().is_none() {
            return Err(Error::InvalidArgument(format!(
                "max_margin loss requires class labels on the {name} set; use mse or cosine for unlabeled data"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = RmspropState::zeros_like(&model);
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            train_batch(&mut model, &mut state, train_set, batch, config, epoch, &mut rng)?;
        }

        let train_loss =
            evaluate_dataset_loss(&model, train_set, config.loss, config.margin)?;
        let test_loss = evaluate_dataset_loss(&model, test_set, config.loss, config.margin)?;
        let worst = train_loss.max(test_loss);
        if !worst.is_finite() || worst > DIVERGENCE_LIMIT {
            return Err(Error::Diverged {
                epoch: epoch + 1,
                loss: worst,
            });
        }

        let scheduled = config.mnno_every > 0
            && ((epoch + 1) % config.mnno_every == 0 || epoch + 1 == config.epochs);
        let (mnno_x_train, mnno_x_test, mnno_y_train, mnno_y_test) = if scheduled {
            overlap_metrics(&model, train_set, test_set, config)?
        } else {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        };

        history.records.push(EpochRecord {
            epoch: epoch + 1,
            train_loss,
            test_loss,
            mnno_x_train,
            mnno_x_test,
            mnno_y_train,
            mnno_y_test,
        });
    }
    Ok((model, history))
}
