//! Brute-force references: certified enumeration windows, moments and
//! entropies by summation, an independent recomputation of every PMF, and
//! central finite differences.
//!
//! Every window comes with a closed-form bound on the mass it leaves out.
//! Writing `c` for the mode clamped into the support and `d = |n − c|`:
//!
//! ```text
//! dalap      p(n) ≤ γ^(d − 1)           tail ≤ 2 γ^m / (1 − γ)
//! danorm     p(n) ≤ γ^(d (d − 1))       tail ≤ 2 γ^(m (m + 1)) / (1 − γ^(2m + 2))
//! dnormal    tail ≤ 2 φ(t) / t          t = m / σ
//! dlaplace   tail ≤ e^(−t)              t = m / b
//! dlogistic  tail ≤ 2 e^(−t)            t = m / s
//! dweib      tail = exp(−((N + 1)/α)^β) on [0, N]
//! ```
//!
//! Bounded supports small enough to enumerate are enumerated whole.

use crate::bitwise::{self, Bitstring, BitwiseParams};
use crate::dist::{Discrete, Params, Parametric};
use crate::error::{Error, Result};
use crate::mixture::MixtureParams;
use crate::numcore::{logsumexp, round_half_up, GradRecord, Support};

/// Largest window the oracle will enumerate.
pub const BUDGET: u64 = 10_000_000;
/// Mass a window may leave out. Well below what any caller needs, so that
/// moments and pointwise comparisons are not limited by truncation.
pub const TAIL_TARGET: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationWindow {
    pub low: i64,
    pub high: i64,
    /// Certified upper bound on the mass outside `[low, high]`.
    pub truncated_mass_bound: f64,
}

impl EnumerationWindow {
    pub fn len(&self) -> u64 {
        (self.high as i128 - self.low as i128 + 1) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.high < self.low
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.low..=self.high
    }
}

/// A distribution the oracle can enumerate and recompute independently.
pub trait Enumerable: Discrete {
    /// The support actually served for a requested one.
    fn served_support(&self, requested: Support) -> Result<Support>;

    fn window(&self, support: Support) -> Result<EnumerationWindow>;

    /// Masses on `[low, high]` computed without the closed-form normalizers
    /// used by `log_prob`.
    fn reference_masses(&self, support: Support, low: i64, high: i64) -> Result<Vec<f64>>;
}

fn whole(support: Support) -> Option<EnumerationWindow> {
    match support.size() {
        Some(n) if n > 0 && n <= BUDGET => Some(EnumerationWindow {
            low: support.low().unwrap(),
            high: support.high().unwrap(),
            truncated_mass_bound: 0.0,
        }),
        _ => None,
    }
}

/// `[c − m, c + m]` intersected with the support, checked against the budget.
fn around(center: i64, m: f64, bound: f64, support: Support) -> Result<EnumerationWindow> {
    if !(m.is_finite() && m < BUDGET as f64) {
        return Err(Error::EnumerationBudget {
            size: if m.is_finite() { (2.0 * m) as u64 } else { u64::MAX },
            budget: BUDGET,
        });
    }
    let m = (m.ceil() as i64).max(1);
    let low = support.low().map_or(center - m, |l| l.max(center - m));
    let high = support.high().map_or(center + m, |u| u.min(center + m));
    let w = EnumerationWindow {
        low,
        high,
        truncated_mass_bound: bound,
    };
    if w.len() > BUDGET {
        return Err(Error::EnumerationBudget {
            size: w.len(),
            budget: BUDGET,
        });
    }
    Ok(w)
}

/// Smallest `t` in `[1, 100]` with `tail(t) ≤ target`, to within 1e-9.
fn solve_tail(tail: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (1.0, 100.0);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > TAIL_TARGET {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn normal_tail(t: f64) -> f64 {
    2.0 * (-0.5 * t * t).exp() / ((2.0 * std::f64::consts::PI).sqrt() * t)
}

fn laplace_tail(t: f64) -> f64 {
    (-t).exp()
}

fn logistic_tail(t: f64) -> f64 {
    2.0 * (-t).exp()
}

fn mode_center(mu: f64, support: Support) -> Result<i64> {
    if support.is_empty() {
        return Err(Error::EmptySupport(support));
    }
    Ok(support.clamp(round_half_up(mu)?))
}

/// Standardized rounded-family window: half-width `t · scale`.
fn scaled_window(mu: f64, scale: f64, tail: fn(f64) -> f64, support: Support) -> Result<EnumerationWindow> {
    let t = solve_tail(tail);
    around(mode_center(mu, support)?, t * scale, tail(t), support)
}

impl Enumerable for Params {
    fn served_support(&self, requested: Support) -> Result<Support> {
        self.effective_support(requested)
    }

    fn window(&self, support: Support) -> Result<EnumerationWindow> {
        let support = self.effective_support(support)?;
        if let Some(w) = whole(support) {
            return Ok(w);
        }
        match self {
            Params::Dalap(p) => {
                let g = p.gamma();
                let m = ((TAIL_TARGET * (1.0 - g) / 2.0).ln() / g.ln()).ceil().max(1.0);
                let bound = 2.0 * g.powf(m) / (1.0 - g);
                around(mode_center(p.mu(), support)?, m, bound, support)
            }
            Params::Danorm(p) => {
                let g = p.gamma();
                let tail = |m: f64| 2.0 * g.powf(m * (m + 1.0)) / (1.0 - g.powf(2.0 * m + 2.0));
                let mut m = 1.0;
                while tail(m) > TAIL_TARGET {
                    m += 1.0;
                }
                around(mode_center(p.mu(), support)?, m, tail(m), support)
            }
            Params::DNormal(p) => scaled_window(p.mu(), p.sigma(), normal_tail, support),
            Params::DLaplace(p) => scaled_window(p.mu(), p.b(), laplace_tail, support),
            Params::DLogistic(p) => scaled_window(p.mu(), p.s(), logistic_tail, support),
            Params::DWeibull(p) => {
                let reach = p.alpha() * (1.0 / TAIL_TARGET).ln().powf(1.0 / p.beta());
                let n = (reach.ceil() - 1.0).max(0.0);
                if n >= BUDGET as f64 {
                    return Err(Error::EnumerationBudget {
                        size: n as u64,
                        budget: BUDGET,
                    });
                }
                let n = n as i64;
                let bound = (-((n as f64 + 1.0) / p.alpha()).powf(p.beta())).exp();
                let high = support.high().map_or(n, |u| u.min(n));
                let bound = if support.high().is_some_and(|u| u <= n) { 0.0 } else { bound };
                Ok(EnumerationWindow {
                    low: 0,
                    high,
                    truncated_mass_bound: bound,
                })
            }
            Params::Bitwise(_) => unreachable!("bitwise supports are bounded"),
        }
    }

    fn reference_masses(&self, support: Support, low: i64, high: i64) -> Result<Vec<f64>> {
        let support = self.effective_support(support)?;
        let points = || (low..=high).filter(|n| support.contains(*n));
        let scatter = |values: Vec<(i64, f64)>| {
            let mut out = vec![0.0; (high - low + 1) as usize];
            for (n, v) in values {
                out[(n - low) as usize] = v;
            }
            out
        };
        match self {
            Params::Dalap(p) => {
                let lg = p.gamma().ln();
                Ok(scatter(normalize_raw(points().map(|n| (n, (n as f64 - p.mu()).abs() * lg)).collect())))
            }
            Params::Danorm(p) => {
                let lg = p.gamma().ln();
                Ok(scatter(normalize_raw(points().map(|n| (n, (n as f64 - p.mu()).powi(2) * lg)).collect())))
            }
            Params::DNormal(p) => Ok(scatter(quadrature_masses(points(), p.mu(), p.sigma(), support, Density::Normal))),
            Params::DLaplace(p) => Ok(scatter(quadrature_masses(points(), p.mu(), p.b(), support, Density::Laplace))),
            Params::DLogistic(p) => Ok(scatter(quadrature_masses(points(), p.mu(), p.s(), support, Density::Logistic))),
            Params::DWeibull(p) => {
                let surv = |x: f64| (-(x / p.alpha()).powf(p.beta())).exp();
                Ok(scatter(
                    points()
                        .map(|n| {
                            let x = n as f64;
                            let upper = if support.high() == Some(n) { 0.0 } else { surv(x + 1.0) };
                            (n, surv(x) - upper)
                        })
                        .collect(),
                ))
            }
            Params::Bitwise(b) => Ok(bitstring_masses(b, low, high)),
        }
    }
}

/// `exp(v − logsumexp(v))` for raw log weights.
fn normalize_raw(raw: Vec<(i64, f64)>) -> Vec<(i64, f64)> {
    if raw.is_empty() {
        return raw;
    }
    let logs: Vec<f64> = raw.iter().map(|(_, v)| *v).collect();
    let lz = logsumexp(&logs);
    raw.into_iter().map(|(n, v)| (n, (v - lz).exp())).collect()
}

/// Mass of every code in `[low, high]`, visiting all `2^k` (or `2^(k+1)`) bitstrings.
fn bitstring_masses(b: &BitwiseParams, low: i64, high: i64) -> Vec<f64> {
    let k = b.k();
    let mut out = vec![0.0; (high - low + 1) as usize];
    let signs: Vec<Option<bool>> = if b.signed() { vec![Some(true), Some(false)] } else { vec![None] };
    for sign in signs {
        let sign_mass = match (sign, b.pi_pos()) {
            (Some(true), Some(p)) => p,
            (Some(false), Some(p)) => 1.0 - p,
            _ => 1.0,
        };
        for code in 0u64..(1u64 << k) {
            let bits: Vec<bool> = (0..k).map(|i| (code >> i) & 1 == 1).collect();
            let mass = bits
                .iter()
                .zip(b.probs())
                .fold(sign_mass, |acc, (&x, &p)| acc * if x { p } else { 1.0 - p });
            let n = bitwise::decode(&Bitstring { sign, bits });
            if (low..=high).contains(&n) {
                out[(n - low) as usize] += mass;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum Density {
    Normal,
    Laplace,
    Logistic,
}

impl Density {
    fn log_pdf(self, z: f64) -> f64 {
        match self {
            Density::Normal => -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln(),
            Density::Laplace => -z.abs() - std::f64::consts::LN_2,
            Density::Logistic => {
                let e = (-z.abs()).exp();
                -z.abs() - 2.0 * e.ln_1p()
            }
        }
    }
}

const GL_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// `ln ∫_a^b exp(log_pdf(z)) dz` by composite 8-point Gauss–Legendre, with
/// panels narrowing where the log density is steep.
fn log_integral(d: Density, a: f64, b: f64) -> f64 {
    let mut logs = Vec::new();
    let mut x = a;
    while x < b {
        let h = (0.5 / x.abs().max(1.0)).min(b - x);
        let (mid, half) = (x + 0.5 * h, 0.5 * h);
        for (t, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            for z in [mid - half * t, mid + half * t] {
                logs.push(w.ln() + half.ln() + d.log_pdf(z));
            }
        }
        x += h;
    }
    if logs.is_empty() {
        return f64::NEG_INFINITY;
    }
    logsumexp(&logs)
}

/// Bin masses of a rounded family by direct integration of its density.
fn quadrature_masses(
    points: impl Iterator<Item = i64>,
    mu: f64,
    scale: f64,
    support: Support,
    d: Density,
) -> Vec<(i64, f64)> {
    // beyond 60 standardized units the density is below e^-60 of its value
    // at the nearer edge for every kernel here
    const REACH: f64 = 60.0;
    points
        .map(|n| {
            let mut a = if support.low() == Some(n) { f64::NEG_INFINITY } else { (n as f64 - 0.5 - mu) / scale };
            let mut b = if support.high() == Some(n) { f64::INFINITY } else { (n as f64 + 0.5 - mu) / scale };
            if a >= 0.0 {
                b = b.min(a + REACH);
            } else if b <= 0.0 {
                a = a.max(b - REACH);
            } else {
                a = a.max(-REACH);
                b = b.min(REACH);
            }
            // split at the mode so a kinked density never sits inside a panel
            let lm = if a < 0.0 && b > 0.0 {
                crate::numcore::logaddexp(log_integral(d, a, 0.0), log_integral(d, 0.0, b))
            } else {
                log_integral(d, a, b)
            };
            (n, lm.exp())
        })
        .collect()
}

impl Enumerable for MixtureParams {
    fn served_support(&self, requested: Support) -> Result<Support> {
        self.effective_support(requested)
    }

    fn window(&self, support: Support) -> Result<EnumerationWindow> {
        let mut w: Option<EnumerationWindow> = None;
        for (c, weight) in self.components().iter().zip(self.weights()) {
            let cw = c.window(support)?;
            w = Some(match w {
                None => EnumerationWindow {
                    truncated_mass_bound: weight * cw.truncated_mass_bound,
                    ..cw
                },
                Some(acc) => EnumerationWindow {
                    low: acc.low.min(cw.low),
                    high: acc.high.max(cw.high),
                    truncated_mass_bound: acc.truncated_mass_bound + weight * cw.truncated_mass_bound,
                },
            });
        }
        let w = w.expect("at least one component");
        if w.len() > BUDGET {
            return Err(Error::EnumerationBudget {
                size: w.len(),
                budget: BUDGET,
            });
        }
        Ok(w)
    }

    fn reference_masses(&self, support: Support, low: i64, high: i64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; (high - low + 1) as usize];
        for (c, weight) in self.components().iter().zip(self.weights()) {
            for (o, m) in out.iter_mut().zip(c.reference_masses(support, low, high)?) {
                *o += weight * m;
            }
        }
        Ok(out)
    }
}

fn served<D: Enumerable + ?Sized>(d: &D, support: Support) -> Result<(EnumerationWindow, Support)> {
    let s = d.served_support(support)?;
    Ok((d.window(s)?, s))
}

/// `(n, log p(n))` for every point of the certified window.
pub fn enumerate_log_pmf<D: Enumerable + ?Sized>(d: &D, support: Support) -> Result<(EnumerationWindow, Vec<f64>)> {
    let (w, s) = served(d, support)?;
    let lps = w.iter().map(|n| d.log_prob(n, s)).collect::<Result<Vec<_>>>()?;
    Ok((w, lps))
}

/// `exp(log_prob)` over the certified window.
pub fn enumerate_pmf<D: Enumerable + ?Sized>(d: &D, support: Support) -> Result<(EnumerationWindow, Vec<f64>)> {
    let (w, lps) = enumerate_log_pmf(d, support)?;
    Ok((w, lps.into_iter().map(f64::exp).collect()))
}

/// Independently recomputed masses over the same window as [`enumerate_pmf`].
pub fn reference_pmf<D: Enumerable + ?Sized>(d: &D, support: Support) -> Result<(EnumerationWindow, Vec<f64>)> {
    let (w, s) = served(d, support)?;
    let masses = d.reference_masses(s, w.low, w.high)?;
    Ok((w, masses))
}

/// `Σ n^order p(n) / Σ p(n)` over the window. Dividing by the enumerated
/// mass keeps a truncated symmetric window from biasing the mean toward 0.
pub fn moment<D: Enumerable + ?Sized>(d: &D, support: Support, order: u32) -> Result<f64> {
    let (w, p) = enumerate_pmf(d, support)?;
    let total: f64 = p.iter().sum();
    Ok(w.iter().zip(&p).map(|(n, p)| (n as f64).powi(order as i32) * p).sum::<f64>() / total)
}

/// `Σ (n − mean)² p(n) / Σ p(n)`, centered to avoid cancellation.
pub fn variance<D: Enumerable + ?Sized>(d: &D, support: Support) -> Result<f64> {
    let (w, p) = enumerate_pmf(d, support)?;
    let total: f64 = p.iter().sum();
    let mean = w.iter().zip(&p).map(|(n, p)| n as f64 * p).sum::<f64>() / total;
    Ok(w.iter().zip(&p).map(|(n, p)| (n as f64 - mean).powi(2) * p).sum::<f64>() / total)
}

/// `−Σ p log₂ p` over the window.
pub fn entropy_bits<D: Enumerable + ?Sized>(d: &D, support: Support) -> Result<f64> {
    let (_, lps) = enumerate_log_pmf(d, support)?;
    let nats: f64 = lps
        .into_iter()
        .filter(|lp| lp.is_finite())
        .map(|lp| -lp.exp() * lp)
        .sum();
    Ok(nats / std::f64::consts::LN_2)
}

/// `(f(x + h) − f(x − h)) / 2h`
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central differences of `log_prob(n)` in every parameter.
pub fn fd_grad<D: Discrete + Parametric>(d: &D, n: i64, support: Support, h: f64) -> Result<GradRecord> {
    d.check_margins(n, 10.0 * h)?;
    let names = d.param_names();
    let base = d.param_values();
    let mut g = GradRecord::new();
    for (i, name) in names.into_iter().enumerate() {
        let at = |delta: f64| -> Result<f64> {
            let mut v = base.clone();
            v[i] += delta;
            d.with_param_values(&v)?.log_prob(n, support)
        };
        g.push(name, (at(h)? - at(-h)?) / (2.0 * h));
    }
    Ok(g)
}
