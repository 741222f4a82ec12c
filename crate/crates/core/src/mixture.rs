//! Finite mixtures over a single family.
//!
//! Weights are the normalized exponentials of unconstrained logits. The log
//! mass is `logsumexp_k(log w_k + log p_k(n))`; with responsibilities
//! `r_k = exp(log w_k + log p_k(n) − log p(n))` the gradient is `r_k − w_k`
//! for each logit and `r_k ∇ log p_k(n)` for each component's parameters.

use rand::Rng;

use crate::dist::{Discrete, Family, Params, Parametric};
use crate::error::{Error, Result};
use crate::numcore::{logsumexp, GradRecord, Support};

/// Component counts the mixture accepts.
pub const ALLOWED_K: [usize; 5] = [1, 2, 4, 8, 10];

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    logits: Vec<f64>,
    components: Vec<Params>,
}

impl MixtureParams {
    pub fn new(logits: Vec<f64>, components: Vec<Params>) -> Result<Self> {
        let k = components.len();
        if !ALLOWED_K.contains(&k) {
            return Err(Error::InvalidParameter(format!(
                "mixture size {k} is not one of {ALLOWED_K:?}"
            )));
        }
        if logits.len() != k {
            return Err(Error::InvalidParameter(format!("{} logits for {k} components", logits.len())));
        }
        if let Some(v) = logits.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(*v));
        }
        let first = &components[0];
        let layout = |p: &Params| match p {
            Params::Bitwise(b) => Some(b.layout()),
            _ => None,
        };
        for c in &components[1..] {
            if c.family() != first.family() || layout(c) != layout(first) {
                return Err(Error::HeterogeneousMixture(format!("{} and {}", first.family(), c.family())));
            }
        }
        Ok(Self { logits, components })
    }

    /// Equal weights.
    pub fn uniform(components: Vec<Params>) -> Result<Self> {
        Self::new(vec![0.0; components.len()], components)
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn family(&self) -> Family {
        self.components[0].family()
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn components(&self) -> &[Params] {
        &self.components
    }

    pub fn log_weights(&self) -> Vec<f64> {
        let lz = logsumexp(&self.logits);
        self.logits.iter().map(|l| l - lz).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights().into_iter().map(f64::exp).collect()
    }

    pub fn effective_support(&self, requested: Support) -> Result<Support> {
        self.components[0].effective_support(requested)
    }

    /// Log mass and gradient in one pass, through each component's
    /// training path (see [`Params::training_terms`]).
    pub fn training_terms(&self, n: i64, support: Support) -> Result<(f64, GradRecord)> {
        let terms = self
            .components
            .iter()
            .map(|c| c.training_terms(n, support))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.combine(terms))
    }

    fn combine(&self, terms: Vec<(f64, GradRecord)>) -> (f64, GradRecord) {
        let lw = self.log_weights();
        let joint: Vec<f64> = lw.iter().zip(&terms).map(|(w, (lp, _))| w + lp).collect();
        let total = logsumexp(&joint);
        let resp: Vec<f64> = joint
            .iter()
            .map(|j| if total == f64::NEG_INFINITY { 0.0 } else { (j - total).exp() })
            .collect();
        let mut g = GradRecord::new();
        for (i, (r, w)) in resp.iter().zip(&lw).enumerate() {
            g.push(format!("logit{i}"), r - w.exp());
        }
        for (i, ((_, cg), r)) in terms.into_iter().zip(&resp).enumerate() {
            g.extend(cg.scaled(*r).prefixed(&format!("c{i}.")));
        }
        (total, g)
    }
}

impl From<Params> for MixtureParams {
    fn from(p: Params) -> Self {
        Self {
            logits: vec![0.0],
            components: vec![p],
        }
    }
}

impl Discrete for MixtureParams {
    fn log_prob(&self, n: i64, support: Support) -> Result<f64> {
        if self.k() == 1 {
            return self.components[0].log_prob(n, support);
        }
        let lw = self.log_weights();
        let joint = self
            .components
            .iter()
            .zip(&lw)
            .map(|(c, w)| Ok(w + c.log_prob(n, support)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(logsumexp(&joint))
    }

    fn grad_log_prob(&self, n: i64, support: Support) -> Result<GradRecord> {
        let terms = self
            .components
            .iter()
            .map(|c| Ok((c.log_prob(n, support)?, c.grad_log_prob(n, support)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.combine(terms).1)
    }

    fn mean(&self, support: Support) -> Result<f64> {
        self.components
            .iter()
            .zip(self.weights())
            .map(|(c, w)| Ok(w * c.mean(support)?))
            .sum()
    }

    fn sample<R: Rng + ?Sized>(&self, support: Support, rng: &mut R) -> Result<i64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let w = self.weights();
        let mut pick = self.k() - 1;
        for (i, wi) in w.iter().enumerate() {
            acc += wi;
            if u < acc {
                pick = i;
                break;
            }
        }
        self.components[pick].sample(support, rng)
    }
}

impl Parametric for MixtureParams {
    fn param_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.k()).map(|i| format!("logit{i}")).collect();
        for (i, c) in self.components.iter().enumerate() {
            names.extend(c.param_names().into_iter().map(|n| format!("c{i}.{n}")));
        }
        names
    }

    fn param_values(&self) -> Vec<f64> {
        let mut v = self.logits.clone();
        for c in &self.components {
            v.extend(c.param_values());
        }
        v
    }

    fn with_param_values(&self, values: &[f64]) -> Result<Self> {
        let k = self.k();
        let expected = self.param_values().len();
        if values.len() != expected {
            return Err(Error::InvalidParameter(format!("expected {expected} values, got {}", values.len())));
        }
        let mut at = k;
        let mut components = Vec::with_capacity(k);
        for c in &self.components {
            let m = c.param_values().len();
            components.push(c.with_param_values(&values[at..at + m])?);
            at += m;
        }
        Self::new(values[..k].to_vec(), components)
    }

    fn check_margins(&self, n: i64, margin: f64) -> Result<()> {
        self.components.iter().try_for_each(|c| c.check_margins(n, margin))
    }
}
