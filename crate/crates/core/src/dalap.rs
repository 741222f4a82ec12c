//! Discrete analogue of the Laplace distribution with a continuous location.
//!
//! `p(n) ∝ γ^|n − μ|` on a support `S`. The unnormalized masses split into
//! two geometric runs: the integers at or below `⌊μ⌋` (head mass `γ^f`) and
//! those at or above `⌈μ⌉ = ⌊μ⌋ + 1` (head mass `γ^c`). A bounded support
//! cuts each run to a finite length, so every partition function is a sum of
//! at most two truncated geometric series:
//!
//! ```text
//! unbounded          z  = (γ^f + γ^c) / (1 − γ)
//! [0, ∞), μ ≥ 0      z₁ = (γ^f + γ^c − γ^(μ+1)) / (1 − γ)
//! [l, u], l ≤ μ < u  z₂ = (γ^f + γ^c − γ^(1+μ−l) − γ^(1+u−μ)) / (1 − γ)
//! ```
//!
//! A lower bound `l` is handled by the shift `n' = n − l, μ' = μ − l`; an
//! upper bound by negating `n`, `μ` and the bound. Everything is evaluated in
//! log space, so `γ^(μ−l)` never overflows.

use rand::Rng;

use crate::dist::Discrete;
use crate::error::{Error, Result};
use crate::numcore::{frac_parts, log1mexp_unchecked, logsumexp, sigmoid, sign0, GradRecord, Support, EPS};
use crate::oracle;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DalapParams {
    mu: f64,
    gamma: f64,
}

impl DalapParams {
    /// `gamma` is clamped to `[1e-6, 1 - 1e-6]`.
    pub fn new(mu: f64, gamma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::NonFinite(mu));
        }
        if !gamma.is_finite() {
            return Err(Error::NonFinite(gamma));
        }
        Ok(Self {
            mu,
            gamma: gamma.clamp(EPS, 1.0 - EPS),
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn ln_gamma(&self) -> f64 {
        self.gamma.ln()
    }

    /// Log partition function on `support`.
    pub fn log_z(&self, support: Support) -> Result<f64> {
        let runs = self.runs(support)?;
        Ok(self.log_z_from(&runs))
    }

    /// The regularization term `ln(γ^f + γ^c)` of the unbounded NLL.
    pub fn integer_penalty(&self) -> f64 {
        let fp = frac_parts(self.mu).expect("finite mu");
        let lg = self.ln_gamma();
        logsumexp(&[fp.f * lg, fp.c * lg])
    }

    fn log_z_from(&self, runs: &[Run]) -> f64 {
        let lg = self.ln_gamma();
        let masses: Vec<f64> = runs.iter().map(|r| r.log_mass(lg)).collect();
        logsumexp(&masses) - (-self.gamma).ln_1p()
    }

    /// Geometric runs in the original coordinates.
    fn runs(&self, support: Support) -> Result<Vec<Run>> {
        if support.is_empty() {
            return Err(Error::EmptySupport(support));
        }
        match support {
            Support::Unbounded | Support::Bounded(..) => runs_on(self.mu, support.low(), support.high()),
            Support::LowerBounded(l) => lower_bounded_runs(self.mu, l),
            Support::UpperBounded(u) => {
                let mirrored = lower_bounded_runs(-self.mu, -u)?;
                Ok(mirrored.into_iter().map(Run::mirrored).collect())
            }
        }
    }

    /// Closed-form mean of the unbounded distribution:
    /// `w_f (⌊μ⌋ − γ/(1−γ)) + w_c (⌈μ⌉ + γ/(1−γ))` with `w_f = γ^f / (γ^f + γ^c)`.
    pub fn unbounded_mean(&self) -> f64 {
        let fp = frac_parts(self.mu).expect("finite mu");
        let g = self.gamma;
        let wf = sigmoid(-(fp.c - fp.f) * g.ln());
        let wc = 1.0 - wf;
        let offset = g / (1.0 - g);
        wf * (fp.floor_mu as f64 - offset) + wc * (fp.ceil_mu() as f64 + offset)
    }
}

/// One geometric run of unnormalized masses `γ^(head + j)`, `j = 0..len`,
/// placed at `anchor + step * j`.
#[derive(Debug, Clone, Copy)]
struct Run {
    /// exponent of the first term
    head: f64,
    /// d head / d μ
    slope: f64,
    len: Option<u64>,
    anchor: i64,
    step: i64,
}

impl Run {
    /// `ln(γ^head (1 − γ^len))`, i.e. the run's mass times `(1 − γ)`.
    fn log_mass(&self, ln_gamma: f64) -> f64 {
        self.head * ln_gamma + self.len.map_or(0.0, |l| log1mexp_unchecked(l as f64 * ln_gamma))
    }

    fn shifted(mut self, by: i64) -> Self {
        self.anchor += by;
        self
    }

    fn mirrored(mut self) -> Self {
        self.slope = -self.slope;
        self.anchor = -self.anchor;
        self.step = -self.step;
        self
    }
}

fn runs_on(mu: f64, low: Option<i64>, high: Option<i64>) -> Result<Vec<Run>> {
    let fp = frac_parts(mu)?;
    let (fl, ce) = (fp.floor_mu, fp.ceil_mu());
    let mut runs = Vec::with_capacity(2);

    // n <= floor(mu), descending from the head
    let hi = high.map_or(fl, |u| u.min(fl));
    if low.is_none_or(|l| l <= hi) {
        let head = if hi == fl { fp.f } else { mu - hi as f64 };
        runs.push(Run {
            head,
            slope: 1.0,
            len: low.map(|l| (hi - l + 1) as u64),
            anchor: hi,
            step: -1,
        });
    }
    // n >= ceil(mu), ascending from the head
    let lo = low.map_or(ce, |l| l.max(ce));
    if high.is_none_or(|u| lo <= u) {
        let head = if lo == ce { fp.c } else { lo as f64 - mu };
        runs.push(Run {
            head,
            slope: -1.0,
            len: high.map(|u| (u - lo + 1) as u64),
            anchor: lo,
            step: 1,
        });
    }
    Ok(runs)
}

/// Runs for `[l, ∞)` computed on `[0, ∞)` after the shift `μ' = μ − l`.
fn lower_bounded_runs(mu: f64, l: i64) -> Result<Vec<Run>> {
    #[allow(unused_mut)]
    let mut runs = runs_on(mu - l as f64, Some(0), None)?;
    #[cfg(feature = "printed-z1")]
    {
        // uncorrected exponent: gamma^(mu+2) instead of gamma^(mu+1)
        if let Some(left) = runs.iter_mut().find(|r| r.step == -1 && r.head < 1.0) {
            left.len = left.len.map(|n| n + 1);
        }
    }
    Ok(runs.into_iter().map(|r| r.shifted(l)).collect())
}

impl Discrete for DalapParams {
    fn log_prob(&self, n: i64, support: Support) -> Result<f64> {
        support.check(n)?;
        let log_z = self.log_z(support)?;
        Ok((n as f64 - self.mu).abs() * self.ln_gamma() - log_z)
    }

    fn grad_log_prob(&self, n: i64, support: Support) -> Result<GradRecord> {
        support.check(n)?;
        let runs = self.runs(support)?;
        let g = self.gamma;
        let lg = g.ln();
        let masses: Vec<f64> = runs.iter().map(|r| r.log_mass(lg)).collect();
        let total = logsumexp(&masses);

        let mut dz_dmu = 0.0;
        let mut dz_dgamma = 1.0 / (1.0 - g);
        for (r, m) in runs.iter().zip(&masses) {
            let w = (m - total).exp();
            dz_dmu += r.slope * lg * w;
            dz_dgamma += w * r.head / g;
            if let Some(len) = r.len {
                let l = len as f64;
                dz_dgamma -= l * ((r.head + l) * lg - total).exp() / g;
            }
        }

        // Each term γ^|i − μ| differentiates to sign(μ − i) ln γ γ^|i − μ| with
        // sign(0) = 0. At integer μ the run heads hold the term at i = μ, whose
        // share must therefore drop out.
        if let Some(r) = runs.iter().find(|r| r.head == 0.0) {
            dz_dmu -= r.slope * lg * ((-g).ln_1p() - total).exp();
        }

        let dist = n as f64 - self.mu;
        let d_mu = sign0(-dist) * lg - dz_dmu;
        let d_gamma = dist.abs() / g - dz_dgamma;
        Ok(GradRecord::from_pairs([("mu", d_mu), ("gamma", d_gamma)]))
    }

    /// Closed form on the unbounded support; oracle summation otherwise.
    fn mean(&self, support: Support) -> Result<f64> {
        match support {
            Support::Unbounded => Ok(self.unbounded_mean()),
            _ => oracle::moment(&crate::dist::Params::Dalap(*self), support, 1),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, support: Support, rng: &mut R) -> Result<i64> {
        let runs = self.runs(support)?;
        let lg = self.ln_gamma();
        let masses: Vec<f64> = runs.iter().map(|r| r.log_mass(lg)).collect();
        let total = logsumexp(&masses);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = runs[runs.len() - 1];
        for (r, m) in runs.iter().zip(&masses) {
            acc += (m - total).exp();
            if u < acc {
                chosen = *r;
                break;
            }
        }
        // truncated geometric offset by inverse CDF
        let v: f64 = rng.random();
        let span = chosen.len.map_or(1.0, |l| -(l as f64 * lg).exp_m1());
        let mut j = ((-v * span).ln_1p() / lg).floor();
        if let Some(l) = chosen.len {
            j = j.min(l as f64 - 1.0);
        }
        Ok(support.clamp(chosen.anchor + chosen.step * j.max(0.0) as i64))
    }
}
