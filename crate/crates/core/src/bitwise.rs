//! Independent Bernoulli bits decoded to an integer.
//!
//! Magnitude bits are stored least significant first, so bit `i` (1-based)
//! contributes `2^(i−1)`. The nonnegative variant decodes plain binary onto
//! `[0, 2^k − 1]`. The signed variant adds a sign bit with success probability
//! `pi_pos` (1 means positive) and decodes sign-magnitude onto
//! `[−(2^k − 1), 2^k − 1]`. Zero has two codes there; it is always encoded as
//! `+0`, and its mass is the sum over both codes, which is just the magnitude
//! term because the sign probabilities add to one.

use rand::Rng;

use crate::dist::Discrete;
use crate::error::{Error, Result};
use crate::numcore::{GradRecord, Support, EPS};

/// Largest magnitude width; keeps every decoded value inside `i64`.
pub const MAX_BITS: usize = 62;
/// Largest width for which [`BitwiseParams::variance`] enumerates.
pub const MAX_ENUM_BITS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitstring {
    /// `Some(true)` for positive, `None` for the nonnegative variant.
    pub sign: Option<bool>,
    /// least significant first
    pub bits: Vec<bool>,
}

fn magnitude_limit(k: usize) -> i64 {
    ((1u64 << k) - 1) as i64
}

pub fn encode(n: i64, k: usize, signed: bool) -> Result<Bitstring> {
    if k == 0 || k > MAX_BITS {
        return Err(Error::InvalidParameter(format!("bit count {k} outside 1..={MAX_BITS}")));
    }
    let support = variant_support(k, signed);
    if !support.contains(n) {
        return Err(Error::OutOfSupport { n, support });
    }
    let m = n.unsigned_abs();
    Ok(Bitstring {
        sign: signed.then_some(n >= 0),
        bits: (0..k).map(|i| (m >> i) & 1 == 1).collect(),
    })
}

pub fn decode(x: &Bitstring) -> i64 {
    let m = x
        .bits
        .iter()
        .enumerate()
        .fold(0i64, |acc, (i, &b)| acc | ((b as i64) << i));
    match x.sign {
        Some(false) => -m,
        _ => m,
    }
}

pub fn variant_support(k: usize, signed: bool) -> Support {
    let hi = magnitude_limit(k);
    Support::Bounded(if signed { -hi } else { 0 }, hi)
}

/// Smallest variant `(k, signed)` whose support covers `[low, high]`.
pub fn covering(support: Support) -> Result<(usize, bool)> {
    let (low, high) = match support {
        Support::Bounded(l, u) if l <= u => (l, u),
        _ => {
            return Err(Error::UnsupportedSupport {
                family: "bitwise",
                support,
            })
        }
    };
    let signed = low < 0;
    let reach = low.unsigned_abs().max(high.unsigned_abs()).max(1);
    let k = (64 - reach.leading_zeros()) as usize;
    if k > MAX_BITS {
        return Err(Error::UnsupportedSupport {
            family: "bitwise",
            support,
        });
    }
    Ok((k, signed))
}

/// Parameter names, sign first.
pub fn param_names(k: usize, signed: bool) -> Vec<String> {
    let mut names = Vec::with_capacity(k + 1);
    if signed {
        names.push("pi_pos".to_string());
    }
    names.extend((1..=k).map(|i| format!("pi_{i}")));
    names
}

#[derive(Debug, Clone, PartialEq)]
pub struct BitwiseParams {
    probs: Vec<f64>,
    pi_pos: Option<f64>,
}

fn clamp_prob(p: f64) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::NonFinite(p));
    }
    Ok(p.clamp(EPS, 1.0 - EPS))
}

impl BitwiseParams {
    /// `probs` are the magnitude bits, least significant first. Pass
    /// `pi_pos` for the signed variant. All probabilities are clamped to
    /// `[1e-6, 1 - 1e-6]`.
    pub fn new(probs: Vec<f64>, pi_pos: Option<f64>) -> Result<Self> {
        let k = probs.len();
        if k == 0 || k > MAX_BITS {
            return Err(Error::InvalidParameter(format!("bit count {k} outside 1..={MAX_BITS}")));
        }
        Ok(Self {
            probs: probs.into_iter().map(clamp_prob).collect::<Result<_>>()?,
            pi_pos: pi_pos.map(clamp_prob).transpose()?,
        })
    }

    /// Every bit set to `p`.
    pub fn uniform(k: usize, signed: bool, p: f64) -> Result<Self> {
        Self::new(vec![p; k], signed.then_some(p))
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn signed(&self) -> bool {
        self.pi_pos.is_some()
    }

    pub fn layout(&self) -> (usize, bool) {
        (self.k(), self.signed())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn pi_pos(&self) -> Option<f64> {
        self.pi_pos
    }

    pub fn support(&self) -> Support {
        variant_support(self.k(), self.signed())
    }

    pub fn names(&self) -> Vec<String> {
        param_names(self.k(), self.signed())
    }

    /// Values in [`BitwiseParams::names`] order.
    pub fn values(&self) -> Vec<f64> {
        self.pi_pos.iter().chain(&self.probs).copied().collect()
    }

    fn check(&self, n: i64, support: Support) -> Result<()> {
        support.check(n)?;
        let own = self.support();
        if !own.contains(n) {
            return Err(Error::OutOfSupport { n, support: own });
        }
        Ok(())
    }

    fn magnitude_log_prob(&self, m: u64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| if (m >> i) & 1 == 1 { p.ln() } else { (-p).ln_1p() })
            .sum()
    }

    /// Exact variance by enumerating every magnitude, for `k ≤ 20`.
    pub fn variance(&self) -> Result<f64> {
        if self.k() > MAX_ENUM_BITS {
            return Err(Error::EnumerationBudget {
                size: 1u64 << self.k(),
                budget: 1u64 << MAX_ENUM_BITS,
            });
        }
        let masses = self.magnitude_masses();
        let (mut m1, mut m2) = (0.0, 0.0);
        for (m, p) in masses.iter().enumerate() {
            let x = m as f64;
            m1 += p * x;
            m2 += p * x * x;
        }
        // a sign flip leaves the second moment alone
        let sign_mean = self.pi_pos.map_or(1.0, |p| 2.0 * p - 1.0);
        let mean = sign_mean * m1;
        Ok((m2 - mean * mean).max(0.0))
    }

    /// `P(M = m)` for every magnitude, built one bit at a time.
    pub(crate) fn magnitude_masses(&self) -> Vec<f64> {
        let mut masses = vec![1.0];
        for &p in &self.probs {
            let mut next = Vec::with_capacity(masses.len() * 2);
            next.extend(masses.iter().map(|q| q * (1.0 - p)));
            next.extend(masses.iter().map(|q| q * p));
            masses = next;
        }
        masses
    }
}

impl Discrete for BitwiseParams {
    fn log_prob(&self, n: i64, support: Support) -> Result<f64> {
        self.check(n, support)?;
        let mag = self.magnitude_log_prob(n.unsigned_abs());
        let sign = match self.pi_pos {
            Some(p) if n > 0 => p.ln(),
            Some(p) if n < 0 => (-p).ln_1p(),
            // both codes of zero: ln(pi_pos + (1 - pi_pos)) = 0
            _ => 0.0,
        };
        Ok(mag + sign)
    }

    fn grad_log_prob(&self, n: i64, support: Support) -> Result<GradRecord> {
        self.check(n, support)?;
        let m = n.unsigned_abs();
        let mut g = GradRecord::new();
        if let Some(p) = self.pi_pos {
            let d = match n.signum() {
                1 => 1.0 / p,
                -1 => -1.0 / (1.0 - p),
                _ => 0.0,
            };
            g.push("pi_pos", d);
        }
        for (i, &p) in self.probs.iter().enumerate() {
            let d = if (m >> i) & 1 == 1 { 1.0 / p } else { -1.0 / (1.0 - p) };
            g.push(format!("pi_{}", i + 1), d);
        }
        Ok(g)
    }

    fn mean(&self, support: Support) -> Result<f64> {
        if support.is_empty() {
            return Err(Error::EmptySupport(support));
        }
        let magnitude: f64 = self
            .probs
            .iter()
            .enumerate()
            .map(|(i, p)| p * 2f64.powi(i as i32))
            .sum();
        Ok(match self.pi_pos {
            Some(p) => (p - (1.0 - p)) * magnitude,
            None => magnitude,
        })
    }

    fn sample<R: Rng + ?Sized>(&self, _support: Support, rng: &mut R) -> Result<i64> {
        let x = Bitstring {
            sign: self.pi_pos.map(|p| rng.random::<f64>() < p),
            bits: self.probs.iter().map(|&p| rng.random::<f64>() < p).collect(),
        };
        Ok(decode(&x))
    }
}
