//! Numeric foundations shared by every family: supports, rounding and
//! floor/ceiling conventions, log-domain primitives and the error function.

mod erf;
mod support;

pub use erf::{erf, erf_deriv, erfc, log_erfc, TWO_OVER_SQRT_PI};
pub(crate) use erf::{norm_central, norm_log_cdf, norm_log_pdf};
pub use support::Support;

use std::fmt;

use crate::error::{Error, Result};

/// Lower clamp for decay rates, Bernoulli probabilities and scales.
pub const EPS: f64 = 1e-6;

/// Floor of `mu` and the fractional distances to its floor and ceiling.
///
/// The ceiling is always `floor + 1`, also for integer `mu`, so `f + c == 1`
/// and an integer location has `f = 0, c = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParts {
    pub floor_mu: i64,
    pub f: f64,
    pub c: f64,
}

impl FracParts {
    pub fn ceil_mu(&self) -> i64 {
        self.floor_mu + 1
    }
}

pub fn frac_parts(mu: f64) -> Result<FracParts> {
    if !mu.is_finite() {
        return Err(Error::NonFinite(mu));
    }
    let mut fl = mu.floor();
    let mut f = mu - fl;
    // -1e-20 - floor(-1e-20) rounds to exactly 1.0
    if f >= 1.0 {
        fl += 1.0;
        f = 0.0;
    }
    Ok(FracParts {
        floor_mu: fl as i64,
        f,
        c: 1.0 - f,
    })
}

/// The rounding map onto the integers: `x` in `[n - 1/2, n + 1/2)` maps to `n`.
pub fn round_half_up(x: f64) -> Result<i64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    let fl = x.floor();
    let n = if x - fl >= 0.5 { fl + 1.0 } else { fl };
    Ok(n as i64)
}

/// `ln(1 - e^a)` for `a < 0`.
pub fn log1mexp(a: f64) -> Result<f64> {
    if a.is_nan() {
        return Err(Error::NonFinite(a));
    }
    if a >= 0.0 {
        return Err(Error::NonNegativeLogArgument(a));
    }
    Ok(log1mexp_unchecked(a))
}

/// [`log1mexp`] without the domain check; `a = 0` gives `-inf`.
#[inline]
pub(crate) fn log1mexp_unchecked(a: f64) -> f64 {
    if a > -std::f64::consts::LN_2 {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

/// `ln sum exp(v_i)` via the shift-by-max identity. All `-inf` gives `-inf`.
///
/// # Panics
///
/// Panics on an empty slice.
pub fn logsumexp(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "logsumexp of an empty sequence");
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    let s: f64 = values.iter().map(|v| (v - m).exp()).sum();
    m + s.ln()
}

/// Two-argument [`logsumexp`].
#[inline]
pub fn logaddexp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)`
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Sign with `sign(0) = 0`.
#[inline]
pub(crate) fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Named partial derivatives of a scalar with respect to each parameter of a
/// family, in the family's canonical parameter order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradRecord {
    entries: Vec<(String, f64)>,
}

impl GradRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Self {
            entries: pairs.into_iter().map(|(n, v)| (n.into(), v)).collect(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, partial: f64) {
        self.entries.push((name.into(), partial));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(n, v)| (n.as_str(), *v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, v)| *v).collect()
    }

    /// Prefix every name, e.g. `mu` -> `c2.mu` for mixture components.
    pub fn prefixed(self, prefix: &str) -> Self {
        Self {
            entries: self
                .entries
                .into_iter()
                .map(|(n, v)| (format!("{prefix}{n}"), v))
                .collect(),
        }
    }

    pub fn scaled(mut self, k: f64) -> Self {
        for (_, v) in &mut self.entries {
            *v *= k;
        }
        self
    }

    pub fn extend(&mut self, other: GradRecord) {
        self.entries.extend(other.entries);
    }
}

impl fmt::Display for GradRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (n, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}={v:.6e}")?;
        }
        Ok(())
    }
}
