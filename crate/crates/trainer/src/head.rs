//! Maps from unconstrained network outputs to distribution parameters.
//!
//! Layout of the raw output vector: a single value for the squared-error
//! baseline; the family's parameters in canonical order for `K = 1`; and for
//! `K > 1`, `K` mixture logits followed by each component's parameters.

use std::fmt;
use std::str::FromStr;

use intdist::bitwise;
use intdist::danorm::GAMMA_MAX;
use intdist::dist::canonical_names;
use intdist::mixture::ALLOWED_K;
use intdist::numcore::{sigmoid, softplus, EPS};
use intdist::{Discrete, Family, MixtureParams, Params, Support};

use crate::error::{Result, TrainError};

/// Training objective: a family's negative log-likelihood or squared error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    SquaredError,
    Nll(Family),
}

impl Loss {
    pub fn name(&self) -> &'static str {
        match self {
            Loss::SquaredError => "sqerr",
            Loss::Nll(f) => f.name(),
        }
    }

    pub fn family(&self) -> Option<Family> {
        match self {
            Loss::SquaredError => None,
            Loss::Nll(f) => Some(*f),
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Loss {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "sqerr" {
            return Ok(Loss::SquaredError);
        }
        s.parse::<Family>()
            .map(Loss::Nll)
            .map_err(|_| TrainError::Config(format!("unknown family {s:?}")))
    }
}

/// Elementwise output activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputMap {
    Identity,
    /// Logistic sigmoid clamped to `[EPS, hi]`.
    Sigmoid { hi: f64 },
    /// `ln(1 + e^x) + EPS`
    Softplus,
}

impl OutputMap {
    /// Value and derivative. A clamped sigmoid has derivative zero.
    pub fn apply(self, x: f64) -> (f64, f64) {
        match self {
            OutputMap::Identity => (x, 1.0),
            OutputMap::Sigmoid { hi } => {
                let s = sigmoid(x);
                if s < EPS {
                    (EPS, 0.0)
                } else if s > hi {
                    (hi, 0.0)
                } else {
                    (s, s * (1.0 - s))
                }
            }
            OutputMap::Softplus => (softplus(x) + EPS, sigmoid(x)),
        }
    }

    /// A raw value mapping to `y`, for initialization.
    pub fn preimage(self, y: f64) -> f64 {
        match self {
            OutputMap::Identity => y,
            OutputMap::Sigmoid { hi } => {
                let y = y.clamp(2.0 * EPS, hi - EPS);
                (y / (1.0 - y)).ln()
            }
            OutputMap::Softplus => {
                let y = (y - EPS).max(1e-3);
                // ln(e^y - 1)
                y + (-(-y).exp()).ln_1p()
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            OutputMap::Identity => "identity".into(),
            OutputMap::Sigmoid { hi } => format!("sigmoid[{EPS:e},{hi}]"),
            OutputMap::Softplus => format!("softplus+{EPS:e}"),
        }
    }
}

fn map_for(family: Family, name: &str) -> OutputMap {
    match name {
        "mu" => OutputMap::Identity,
        "gamma" if family == Family::Danorm => OutputMap::Sigmoid { hi: GAMMA_MAX },
        "gamma" => OutputMap::Sigmoid { hi: 1.0 - EPS },
        n if n.starts_with("pi") => OutputMap::Sigmoid { hi: 1.0 - EPS },
        _ => OutputMap::Softplus,
    }
}

/// The prediction head: loss, mixture size, support and output maps.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadSpec {
    loss: Loss,
    k: usize,
    support: Support,
    layout: Option<(usize, bool)>,
    component_names: Vec<String>,
}

impl HeadSpec {
    /// `bits` applies to Bitwise only; without it the bit count is the
    /// smallest one covering a bounded `support`.
    pub fn new(loss: Loss, k: usize, support: Support, bits: Option<usize>) -> Result<Self> {
        if !ALLOWED_K.contains(&k) {
            return Err(TrainError::Config(format!("K = {k} is not one of {ALLOWED_K:?}")));
        }
        let family = match loss {
            Loss::SquaredError => {
                if k != 1 || bits.is_some() {
                    return Err(TrainError::Config("sqerr takes neither --k nor --bits".into()));
                }
                return Ok(Self {
                    loss,
                    k,
                    support,
                    layout: None,
                    component_names: Vec::new(),
                });
            }
            Loss::Nll(f) => f,
        };
        let (support, layout) = if family == Family::Bitwise {
            let layout = match bits {
                Some(b) => (b, support.low().is_none_or(|l| l < 0)),
                None => bitwise::covering(support)?,
            };
            if layout.0 == 0 || layout.0 > bitwise::MAX_BITS {
                return Err(TrainError::Config(format!("bit count {} out of range", layout.0)));
            }
            (bitwise::variant_support(layout.0, layout.1), Some(layout))
        } else {
            if bits.is_some() {
                return Err(TrainError::Config("--bits applies to bitwise only".into()));
            }
            if !family.accepts(support) {
                return Err(TrainError::Config(format!("{family} does not accept support {support}")));
            }
            (support, None)
        };
        Ok(Self {
            loss,
            k,
            support,
            layout,
            component_names: canonical_names(family, layout)?,
        })
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The support the head's distributions live on.
    pub fn support(&self) -> Support {
        self.support
    }

    pub fn layout(&self) -> Option<(usize, bool)> {
        self.layout
    }

    pub fn dim(&self) -> usize {
        let p = self.component_names.len();
        match (self.loss, self.k) {
            (Loss::SquaredError, _) => 1,
            (_, 1) => p,
            (_, k) => k * (p + 1),
        }
    }

    pub fn output_names(&self) -> Vec<String> {
        match (self.loss, self.k) {
            (Loss::SquaredError, _) => vec!["y".into()],
            (_, 1) => self.component_names.clone(),
            (_, k) => {
                let mut v: Vec<String> = (0..k).map(|i| format!("logit{i}")).collect();
                for i in 0..k {
                    v.extend(self.component_names.iter().map(|n| format!("c{i}.{n}")));
                }
                v
            }
        }
    }

    pub fn output_maps(&self) -> Vec<OutputMap> {
        let Some(family) = self.loss.family() else {
            return vec![OutputMap::Identity];
        };
        let comp = self.component_names.iter().map(|n| map_for(family, n));
        if self.k == 1 {
            return comp.collect();
        }
        let comp: Vec<OutputMap> = comp.collect();
        let mut v = vec![OutputMap::Identity; self.k];
        for _ in 0..self.k {
            v.extend(&comp);
        }
        v
    }

    fn check_len(&self, raw: &[f64]) -> Result<()> {
        if raw.len() != self.dim() {
            return Err(TrainError::Config(format!("head expects {} outputs, got {}", self.dim(), raw.len())));
        }
        Ok(())
    }

    /// Mapped values and their derivatives with respect to the raw outputs.
    fn mapped(&self, raw: &[f64]) -> (Vec<f64>, Vec<f64>) {
        raw.iter().zip(self.output_maps()).map(|(x, m)| m.apply(*x)).unzip()
    }

    fn build(&self, values: &[f64]) -> Result<MixtureParams> {
        let family = self.loss.family().expect("distribution head");
        if self.k == 1 {
            return Ok(Params::from_values(family, values, self.layout)?.into());
        }
        let p = self.component_names.len();
        let comps = values[self.k..]
            .chunks(p)
            .map(|c| Params::from_values(family, c, self.layout))
            .collect::<intdist::Result<Vec<_>>>()?;
        Ok(MixtureParams::new(values[..self.k].to_vec(), comps)?)
    }

    /// The distribution described by `raw`. Errors for the squared-error head.
    pub fn params(&self, raw: &[f64]) -> Result<MixtureParams> {
        self.check_len(raw)?;
        if self.loss == Loss::SquaredError {
            return Err(TrainError::Config("sqerr has no distribution".into()));
        }
        self.build(&self.mapped(raw).0)
    }

    /// Per-instance loss (nats, or squared error) and its gradient with
    /// respect to the raw outputs.
    pub fn loss_and_grad(&self, raw: &[f64], y: i64) -> Result<(f64, Vec<f64>)> {
        self.check_len(raw)?;
        if self.loss == Loss::SquaredError {
            let d = raw[0] - y as f64;
            return Ok((d * d, vec![2.0 * d]));
        }
        let (values, dmap) = self.mapped(raw);
        let (lp, g) = if self.k == 1 {
            let family = self.loss.family().expect("distribution head");
            Params::from_values(family, &values, self.layout)?.training_terms(y, self.support)?
        } else {
            self.build(&values)?.training_terms(y, self.support)?
        };
        debug_assert_eq!(g.len(), raw.len());
        let grad = g.values().iter().zip(&dmap).map(|(gi, d)| -gi * d).collect();
        Ok((-lp, grad))
    }

    pub fn loss_only(&self, raw: &[f64], y: i64) -> Result<f64> {
        Ok(self.loss_and_grad(raw, y)?.0)
    }

    /// Point prediction: the distribution mean, or the raw output for sqerr.
    pub fn predict(&self, raw: &[f64]) -> Result<f64> {
        if self.loss == Loss::SquaredError {
            self.check_len(raw)?;
            return Ok(raw[0]);
        }
        Ok(self.params(raw)?.mean(self.support)?)
    }

    /// Output biases matched to the training targets: locations at target
    /// quantiles (mean for a single component), scales at the target spread,
    /// Bitwise probabilities at the empirical bit frequencies.
    pub fn initial_bias(&self, targets: &[i64]) -> Vec<f64> {
        let maps = self.output_maps();
        if targets.is_empty() {
            return vec![0.0; maps.len()];
        }
        let n = targets.len() as f64;
        let mean = targets.iter().map(|&t| t as f64).sum::<f64>() / n;
        let sd = (targets.iter().map(|&t| (t as f64 - mean).powi(2)).sum::<f64>() / n).sqrt();
        if self.loss == Loss::SquaredError {
            return vec![mean];
        }
        let mut sorted = targets.to_vec();
        sorted.sort_unstable();
        let quantile = |q: f64| sorted[((q * n) as usize).min(sorted.len() - 1)] as f64;
        let freq = self.layout.map(|(k, signed)| {
            let mut counts = vec![0.0; k + 1];
            for &t in targets {
                if let Ok(b) = bitwise::encode(t, k, signed) {
                    counts[0] += b.sign.unwrap_or(false) as u8 as f64;
                    for (c, bit) in counts[1..].iter_mut().zip(&b.bits) {
                        *c += *bit as u8 as f64;
                    }
                }
            }
            counts.iter().map(|c| (c / n).clamp(0.01, 0.99)).collect::<Vec<_>>()
        });
        let mut bias = Vec::with_capacity(maps.len());
        let offset = if self.k == 1 { 0 } else { self.k };
        bias.extend(std::iter::repeat_n(0.0, offset));
        for i in 0..self.k {
            let loc = if self.k == 1 { mean } else { quantile((i as f64 + 0.5) / self.k as f64) };
            for (j, name) in self.component_names.iter().enumerate() {
                let m = maps[offset + i * self.component_names.len() + j];
                let v = match name.as_str() {
                    "mu" => loc,
                    "gamma" => 0.5,
                    "alpha" => loc.max(0.0) + 1.0,
                    "beta" => 1.0,
                    "pi_pos" => freq.as_ref().map_or(0.5, |f| f[0]),
                    n if n.starts_with("pi_") => {
                        let idx: usize = n[3..].parse().unwrap_or(1);
                        freq.as_ref().map_or(0.5, |f| f[idx])
                    }
                    _ => sd.max(1.0),
                };
                bias.push(m.preimage(v));
            }
        }
        bias
    }
}
