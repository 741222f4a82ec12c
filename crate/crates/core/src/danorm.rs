//! Discrete analogue of the normal distribution, `p(n) ∝ γ^((n − μ)²)`.
//!
//! The partition function has no closed form. It is approximated by summing
//! the unnormalized masses over the window `[⌊μ⌋ − W, ⌈μ⌉ + W]` (terms
//! outside the support count as zero). With `γ ≤ 0.95` and the default
//! `W = 500` the neglected mass is below `γ^(W²) / (1 − γ)`, i.e. nothing
//! representable in `f64`.
//!
//! The window sum is accumulated per instance, walking outwards from the
//! mode, so batch evaluation never materializes a `(batch × 2W)` table.
//! Setting `γ = exp(−1/(2s))` gives the familiar normal form with variance-like
//! dispersion `s`.

use rand::Rng;

use crate::dist::Discrete;
use crate::error::{Error, Result};
use crate::numcore::{frac_parts, round_half_up, GradRecord, Support, EPS};

pub const GAMMA_MAX: f64 = 0.95;
pub const DEFAULT_WINDOW: u32 = 500;

/// Terms this far (in log space) below the largest one are exactly zero
/// after `exp`, so the walk can stop there.
const NEGLIGIBLE: f64 = -746.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DanormParams {
    mu: f64,
    gamma: f64,
    window: u32,
}

/// Moments of the normalized window weights, relative to `μ`.
#[derive(Debug, Clone, Copy)]
struct WindowSums {
    log_z: f64,
    /// E[i − μ]
    m1: f64,
    /// E[(i − μ)²]
    m2: f64,
}

impl DanormParams {
    /// `gamma` is clamped to `[1e-6, 0.95]`; the window defaults to 500.
    pub fn new(mu: f64, gamma: f64) -> Result<Self> {
        Self::with_window(mu, gamma, DEFAULT_WINDOW)
    }

    pub fn with_window(mu: f64, gamma: f64, window: u32) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::NonFinite(mu));
        }
        if !gamma.is_finite() {
            return Err(Error::NonFinite(gamma));
        }
        if window == 0 {
            return Err(Error::InvalidParameter("danorm window must be at least 1".into()));
        }
        Ok(Self {
            mu,
            gamma: gamma.clamp(EPS, GAMMA_MAX),
            window,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    /// Integer range summed over: the window intersected with the support.
    pub fn range(&self, support: Support) -> Result<(i64, i64)> {
        let fp = frac_parts(self.mu)?;
        let w = self.window as i64;
        let lo = support.low().map_or(fp.floor_mu - w, |l| l.max(fp.floor_mu - w));
        let hi = support.high().map_or(fp.ceil_mu() + w, |u| u.min(fp.ceil_mu() + w));
        if lo > hi {
            return Err(Error::InvalidSupport(format!(
                "support {support} does not intersect the window [{}, {}]",
                fp.floor_mu - w,
                fp.ceil_mu() + w
            )));
        }
        Ok((lo, hi))
    }

    fn log_term(&self, i: i64, ln_gamma: f64) -> f64 {
        let d = i as f64 - self.mu;
        d * d * ln_gamma
    }

    /// Mode of the window terms and the index range where terms are non-negligible.
    fn effective_range(&self, support: Support) -> Result<(i64, i64, i64)> {
        let (lo, hi) = self.range(support)?;
        let center = round_half_up(self.mu)?.clamp(lo, hi);
        Ok((lo, hi, center))
    }

    fn sums(&self, support: Support) -> Result<WindowSums> {
        let (lo, hi, center) = self.effective_range(support)?;
        let lg = self.gamma.ln();
        let top = self.log_term(center, lg);
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        let mut add = |i: i64| -> bool {
            let t = self.log_term(i, lg) - top;
            if t < NEGLIGIBLE {
                return false;
            }
            let e = t.exp();
            let d = i as f64 - self.mu;
            s0 += e;
            s1 += e * d;
            s2 += e * d * d;
            true
        };
        add(center);
        let mut i = center + 1;
        while i <= hi && add(i) {
            i += 1;
        }
        let mut i = center - 1;
        while i >= lo && add(i) {
            i -= 1;
        }
        Ok(WindowSums {
            log_z: top + s0.ln(),
            m1: s1 / s0,
            m2: s2 / s0,
        })
    }

    /// `ln z̃`, the log of the windowed partition sum.
    pub fn log_z_tilde(&self, support: Support) -> Result<f64> {
        Ok(self.sums(support)?.log_z)
    }

    /// `(n − μ)² ln γ − ln z̃` without the support and window checks.
    pub fn log_prob_unchecked(&self, n: i64, support: Support) -> Result<f64> {
        let lz = self.log_z_tilde(support)?;
        Ok(self.log_term(n, self.gamma.ln()) - lz)
    }

    /// Log mass and gradient from one pass over the window, without the
    /// support and window checks.
    pub fn log_prob_and_grad_unchecked(&self, n: i64, support: Support) -> Result<(f64, GradRecord)> {
        let s = self.sums(support)?;
        let lg = self.gamma.ln();
        let d = n as f64 - self.mu;
        let d_mu = 2.0 * lg * (s.m1 - d);
        let d_gamma = (d * d - s.m2) / self.gamma;
        Ok((
            d * d * lg - s.log_z,
            GradRecord::from_pairs([("mu", d_mu), ("gamma", d_gamma)]),
        ))
    }

    fn check_window(&self, n: i64) -> Result<()> {
        let distance = (n as f64 - self.mu).abs();
        if distance > self.window as f64 {
            return Err(Error::TruncationUnsound {
                distance,
                window: self.window,
            });
        }
        Ok(())
    }

    /// Windowed variance `E[n²] − E[n]²`.
    pub fn variance(&self, support: Support) -> Result<f64> {
        let s = self.sums(support)?;
        Ok((s.m2 - s.m1 * s.m1).max(0.0))
    }
}

impl Discrete for DanormParams {
    fn log_prob(&self, n: i64, support: Support) -> Result<f64> {
        support.check(n)?;
        self.check_window(n)?;
        self.log_prob_unchecked(n, support)
    }

    /// Window endpoints are held fixed with respect to `μ`.
    fn grad_log_prob(&self, n: i64, support: Support) -> Result<GradRecord> {
        support.check(n)?;
        self.check_window(n)?;
        Ok(self.log_prob_and_grad_unchecked(n, support)?.1)
    }

    fn mean(&self, support: Support) -> Result<f64> {
        Ok(self.mu + self.sums(support)?.m1)
    }

    fn sample<R: Rng + ?Sized>(&self, support: Support, rng: &mut R) -> Result<i64> {
        let (lo, hi, center) = self.effective_range(support)?;
        let lg = self.gamma.ln();
        let log_z = self.log_z_tilde(support)?;
        let top = self.log_term(center, lg);
        // walk the non-negligible part of the window left to right
        let mut first = center;
        while first > lo && self.log_term(first - 1, lg) - top >= NEGLIGIBLE {
            first -= 1;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut i = first;
        loop {
            acc += (self.log_term(i, lg) - log_z).exp();
            if u < acc || i >= hi || self.log_term(i + 1, lg) - top < NEGLIGIBLE {
                return Ok(i);
            }
            i += 1;
        }
    }
}
