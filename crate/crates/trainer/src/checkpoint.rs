//! JSON checkpoints.
//!
//! Weight arrays are row-major: `w1[j * input_dim + i]` connects input `i` to
//! hidden unit `j`, and `w2[o * hidden_dim + j]` hidden unit `j` to output `o`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adam::Adam;
use crate::error::{Result, TrainError};
use crate::head::{HeadSpec, Loss};
use crate::mlp::Mlp;
use crate::train::{Model, SplitMetrics, SweepPoint, TrainConfig, TrainOutcome};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitLayout {
    pub bits: usize,
    pub signed: bool,
    pub bit_order: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub family: String,
    pub k: usize,
    /// Support the head's distributions live on.
    pub support: String,
    pub bitwise: Option<BitLayout>,
    pub head_outputs: Vec<String>,
    pub head_maps: Vec<String>,
    pub target: String,
    pub feature_names: Vec<String>,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub weights: Weights,
    pub seed: u64,
    pub optimizer: String,
    pub initialization: String,
    pub config: TrainConfig,
    pub selected_lr: f64,
    pub sweep: Vec<SweepPoint>,
    pub metrics: SplitMetrics,
}

impl Checkpoint {
    pub fn from_outcome(outcome: &TrainOutcome, config: &TrainConfig, target: &str, feature_names: &[String]) -> Self {
        let m = &outcome.model;
        let head = &m.head;
        Self {
            schema_version: SCHEMA_VERSION,
            family: head.loss().name().to_string(),
            k: head.k(),
            support: head.support().to_string(),
            bitwise: head.layout().map(|(bits, signed)| BitLayout {
                bits,
                signed,
                bit_order: "lsb-first".into(),
            }),
            head_outputs: head.output_names(),
            head_maps: head.output_maps().iter().map(|o| o.name()).collect(),
            target: target.to_string(),
            feature_names: feature_names.to_vec(),
            feature_mean: m.feature_mean.clone(),
            feature_scale: m.feature_scale.clone(),
            input_dim: m.mlp.input_dim(),
            hidden_dim: m.mlp.hidden_dim(),
            output_dim: m.mlp.output_dim(),
            weights: Weights {
                w1: m.mlp.w1().to_vec(),
                b1: m.mlp.b1().to_vec(),
                w2: m.mlp.w2().to_vec(),
                b2: m.mlp.b2().to_vec(),
            },
            seed: config.seed,
            optimizer: Adam::describe(),
            initialization: "uniform fan-in weights, zero hidden biases, output biases fitted to training targets".into(),
            config: config.clone(),
            selected_lr: outcome.selected_lr,
            sweep: outcome.sweep.clone(),
            metrics: outcome.metrics,
        }
    }

    /// Rebuild the model, checking the stored head against the config echo.
    pub fn model(&self) -> Result<Model> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(TrainError::Checkpoint(format!(
                "schema version {} (this build reads {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let loss: Loss = self.family.parse()?;
        let head: HeadSpec = self.config.head()?;
        if head.loss() != loss || head.k() != self.k || head.support().to_string() != self.support {
            return Err(TrainError::Checkpoint("head description disagrees with config".into()));
        }
        if head.output_names() != self.head_outputs {
            return Err(TrainError::Checkpoint("head output names disagree with config".into()));
        }
        let d = self.input_dim;
        if self.feature_mean.len() != d || self.feature_scale.len() != d || self.feature_names.len() != d {
            return Err(TrainError::Checkpoint("feature statistics do not match input size".into()));
        }
        let w = &self.weights;
        let theta = [&w.w1, &w.b1, &w.w2, &w.b2].into_iter().flatten().copied().collect();
        let mlp = Mlp::from_parts(d, self.hidden_dim, self.output_dim, theta)?;
        if mlp.w1().len() != w.w1.len() || mlp.b2().len() != w.b2.len() || self.output_dim != head.dim() {
            return Err(TrainError::Checkpoint("weight shapes disagree".into()));
        }
        Ok(Model {
            head,
            mlp,
            feature_mean: self.feature_mean.clone(),
            feature_scale: self.feature_scale.clone(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
