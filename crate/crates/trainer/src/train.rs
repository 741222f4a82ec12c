//! Minibatch training with a learning-rate sweep and validation selection.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use intdist::mixture::ALLOWED_K;
use intdist::Support;

use crate::adam::Adam;
use crate::dataset::{Dataset, Split};
use crate::error::{Result, TrainError};
use crate::head::{HeadSpec, Loss};
use crate::mlp::Mlp;

pub const DEFAULT_SWEEP: [f64; 6] = [3.4e-3, 1e-3, 3.4e-4, 1e-4, 3.4e-5, 1e-5];
pub const DEFAULT_HIDDEN: usize = 128;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_EPOCHS: usize = 40;
pub const DEFAULT_BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(with = "loss_name")]
    pub loss: Loss,
    pub k: usize,
    #[serde(with = "support_text")]
    pub support: Support,
    /// Bitwise magnitude bits; `None` derives them from a bounded support.
    pub bits: Option<usize>,
    pub learning_rates: Vec<f64>,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub hidden_dim: usize,
}

impl TrainConfig {
    pub fn new(loss: Loss) -> Self {
        Self {
            loss,
            k: 1,
            support: Support::Unbounded,
            bits: None,
            learning_rates: DEFAULT_SWEEP.to_vec(),
            batch_size: DEFAULT_BATCH,
            epochs: DEFAULT_EPOCHS,
            seed: DEFAULT_SEED,
            hidden_dim: DEFAULT_HIDDEN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rates.is_empty() {
            return Err(TrainError::Config("no learning rates".into()));
        }
        if let Some(lr) = self.learning_rates.iter().find(|lr| !(lr.is_finite() && **lr > 0.0)) {
            return Err(TrainError::Config(format!("learning rate {lr} is not positive")));
        }
        if !ALLOWED_K.contains(&self.k) {
            return Err(TrainError::Config(format!("K = {} is not one of {ALLOWED_K:?}", self.k)));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(TrainError::Config("batch size and epochs must be positive".into()));
        }
        Ok(())
    }

    pub fn head(&self) -> Result<HeadSpec> {
        HeadSpec::new(self.loss, self.k, self.support, self.bits)
    }
}

pub(crate) mod loss_name {
    use super::Loss;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(l: &Loss, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(l.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Loss, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) mod support_text {
    use intdist::Support;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Support, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Support, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Mean `-log2 p(y)`; absent for the squared-error baseline.
    pub bits: Option<f64>,
    pub rmse: f64,
    /// Instances scored.
    pub count: usize,
    /// Instances whose target lies outside the support. They are excluded
    /// from `bits` and `rmse`.
    pub out_of_support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub train: Metrics,
    pub valid: Metrics,
    pub test: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lr: f64,
    /// 1-based epoch with the lowest validation score
    pub best_epoch: Option<usize>,
    /// Validation bits, or mean squared error for the baseline.
    pub best_valid: Option<f64>,
    /// Mean minibatch training loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub diverged: Option<String>,
}

/// A trained network with its head and input standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub head: HeadSpec,
    pub mlp: Mlp,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
}

impl Model {
    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.feature_mean)
            .zip(&self.feature_scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    /// Raw head outputs for an unstandardized feature row.
    pub fn raw(&self, x: &[f64]) -> Vec<f64> {
        self.mlp.forward(&self.standardize(x))
    }

    /// Loss for one instance and its gradient with respect to every weight.
    pub fn loss_and_grad(&self, x: &[f64], y: i64) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.mlp.theta().len()];
        let loss = self.accumulate(&self.standardize(x), y, &mut grad)?;
        Ok((loss, grad))
    }

    fn accumulate(&self, xs: &[f64], y: i64, grad: &mut [f64]) -> Result<f64> {
        let (raw, cache) = self.mlp.forward_cached(xs);
        let (loss, d_raw) = self.head.loss_and_grad(&raw, y)?;
        self.mlp.backward(xs, &cache, &d_raw, grad);
        Ok(loss)
    }

    /// Mean loss and mean gradient over `idx`, with standardized rows `xs`.
    fn batch(&self, xs: &[Vec<f64>], ys: &[i64], idx: &[usize]) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.mlp.theta().len()];
        let mut total = 0.0;
        for &i in idx {
            total += self.accumulate(&xs[i], ys[i], &mut grad)?;
        }
        let n = idx.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((total / n, grad))
    }

    fn mean_loss(&self, xs: &[Vec<f64>], ys: &[i64], idx: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for &i in idx {
            total += self.head.loss_only(&self.mlp.forward(&xs[i]), ys[i])?;
        }
        Ok(total / idx.len() as f64)
    }

    /// Validation score: bits for distributions, mean squared error otherwise.
    fn score(&self, mean_loss: f64) -> f64 {
        match self.head.loss() {
            Loss::SquaredError => mean_loss,
            Loss::Nll(_) => mean_loss / std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub selected_lr: f64,
    pub sweep: Vec<SweepPoint>,
    pub metrics: SplitMetrics,
}

/// Bits and RMSE over the rows `idx` of `data`.
pub fn evaluate(model: &Model, data: &Dataset, idx: &[usize]) -> Result<Metrics> {
    let support = model.head.support();
    let (mut nll, mut se, mut count, mut outside) = (0.0, 0.0, 0usize, 0usize);
    for &i in idx {
        let y = data.targets[i];
        if !support.contains(y) {
            outside += 1;
            continue;
        }
        let raw = model.raw(&data.features[i]);
        if model.head.loss() != Loss::SquaredError {
            nll += model.head.loss_only(&raw, y)?;
        }
        let d = model.head.predict(&raw)? - y as f64;
        se += d * d;
        count += 1;
    }
    if count == 0 {
        return Err(TrainError::Dataset(format!("no in-support targets to score ({outside} outside)")));
    }
    let n = count as f64;
    let bits = (model.head.loss() != Loss::SquaredError).then(|| nll / n / std::f64::consts::LN_2);
    if let Some(b) = bits {
        // every per-instance term is -log2 of a mass at most one
        assert!(b >= -1e-9, "negative mean bits {b}");
    }
    Ok(Metrics {
        bits,
        rmse: (se / n).sqrt(),
        count,
        out_of_support: outside,
    })
}

pub fn evaluate_splits(model: &Model, data: &Dataset) -> Result<SplitMetrics> {
    Ok(SplitMetrics {
        train: evaluate(model, data, &data.indices(Split::Train))?,
        valid: evaluate(model, data, &data.indices(Split::Valid))?,
        test: evaluate(model, data, &data.indices(Split::Test))?,
    })
}

fn standardization(data: &Dataset, idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let d = data.input_dim();
    let n = idx.len() as f64;
    let mut mean = vec![0.0; d];
    for &i in idx {
        for (m, v) in mean.iter_mut().zip(&data.features[i]) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; d];
    for &i in idx {
        for ((s, v), m) in var.iter_mut().zip(&data.features[i]).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let scale = var.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
    (mean, scale)
}

/// The untrained starting point shared by every sweep point.
pub fn initial_model(data: &Dataset, config: &TrainConfig) -> Result<Model> {
    let head = config.head()?;
    let train = data.indices(Split::Train);
    let (feature_mean, feature_scale) = standardization(data, &train);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut mlp = Mlp::new(data.input_dim(), config.hidden_dim, head.dim(), &mut rng);
    let ys: Vec<i64> = train.iter().map(|&i| data.targets[i]).collect();
    mlp.set_output_bias(&head.initial_bias(&ys));
    Ok(Model {
        head,
        mlp,
        feature_mean,
        feature_scale,
    })
}

/// Train at every configured learning rate and keep the validation-best
/// epoch of the best rate. Test metrics come from that single model.
pub fn train(data: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let start = initial_model(data, config)?;
    let support = start.head.support();
    data.check_support(support)?;
    let (train_idx, valid_idx) = (data.indices(Split::Train), data.indices(Split::Valid));
    for s in Split::ALL {
        if data.indices(s).is_empty() {
            return Err(TrainError::Dataset(format!("{s} split is empty")));
        }
    }
    let xs: Vec<Vec<f64>> = data.features.iter().map(|x| start.standardize(x)).collect();
    let ys = &data.targets;

    let mut sweep = Vec::new();
    let mut best: Option<(f64, f64, Model)> = None;
    for &lr in &config.learning_rates {
        let mut model = start.clone();
        let mut adam = Adam::new(lr, model.mlp.theta().len());
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
        let mut point = SweepPoint {
            lr,
            best_epoch: None,
            best_valid: None,
            epoch_losses: Vec::new(),
            diverged: None,
        };
        let mut point_best: Option<Model> = None;
        let mut order = train_idx.clone();
        'epochs: for epoch in 1..=config.epochs {
            order.shuffle(&mut rng);
            let mut sum = 0.0;
            for chunk in order.chunks(config.batch_size) {
                let step = model.batch(&xs, ys, chunk);
                let (loss, grad) = match step {
                    Ok((l, g)) if l.is_finite() && g.iter().all(|v| v.is_finite()) => (l, g),
                    Ok((l, _)) => {
                        point.diverged = Some(format!("non-finite loss {l} in epoch {epoch}"));
                        break 'epochs;
                    }
                    Err(e) => {
                        point.diverged = Some(format!("epoch {epoch}: {e}"));
                        break 'epochs;
                    }
                };
                adam.step(model.mlp.theta_mut(), &grad);
                if model.mlp.theta().iter().any(|w| !w.is_finite()) {
                    point.diverged = Some(format!("non-finite weights in epoch {epoch}"));
                    break 'epochs;
                }
                sum += loss * chunk.len() as f64;
            }
            point.epoch_losses.push(sum / train_idx.len() as f64);
            let valid = match model.mean_loss(&xs, ys, &valid_idx) {
                Ok(v) if v.is_finite() => model.score(v),
                Ok(v) => {
                    point.diverged = Some(format!("non-finite validation loss {v} in epoch {epoch}"));
                    break;
                }
                Err(e) => {
                    point.diverged = Some(format!("validation in epoch {epoch}: {e}"));
                    break;
                }
            };
            if point.best_valid.is_none_or(|b| valid < b) {
                point.best_valid = Some(valid);
                point.best_epoch = Some(epoch);
                point_best = Some(model.clone());
            }
        }
        if point.diverged.is_none() {
            if let (Some(v), Some(m)) = (point.best_valid, point_best) {
                if best.as_ref().is_none_or(|(b, _, _)| v < *b) {
                    best = Some((v, lr, m));
                }
            }
        }
        sweep.push(point);
    }

    let Some((_, selected_lr, model)) = best else {
        let why = sweep.iter().filter_map(|p| p.diverged.clone()).collect::<Vec<_>>().join("; ");
        return Err(TrainError::AllDiverged(why));
    };
    let metrics = evaluate_splits(&model, data)?;
    Ok(TrainOutcome {
        model,
        selected_lr,
        sweep,
        metrics,
    })
}
