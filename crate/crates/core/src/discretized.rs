//! Families obtained by rounding a continuous variable, plus the discrete Weibull.
//!
//! For the rounded families `p(n) = P(n − ½ ≤ X < n + ½)`. On a bounded
//! support the edge bins absorb the tails: the lowest integer integrates
//! `(−∞, l + ½)` and the highest `[u − ½, ∞)`, which is exactly what
//! clamping a rounded continuous draw produces.
//!
//! The log mass is a log CDF difference over the standardized edges
//! `a < b`. When both edges sit in the upper half it is formed from survival
//! functions, when both sit in the lower half from CDFs, and when the bin
//! straddles the mode from the two central masses `P(0 < Z < ·)`. No branch
//! ever subtracts two numbers close to one.
//!
//! Discrete Weibull: `p(x) = exp(−(x/α)^β) − exp(−((x+1)/α)^β)` on
//! `x = 0, 1, ...`, evaluated as `−u + ln(1 − e^(u − v))` with
//! `u = (x/α)^β, v = ((x+1)/α)^β`.

use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dist::{Discrete, Params};
use crate::error::{Error, Result};
use crate::numcore::{
    log1mexp_unchecked, norm_central, norm_log_cdf, norm_log_pdf, round_half_up, softplus, GradRecord,
    Support, EPS,
};
use crate::oracle;

/// A standardized continuous kernel symmetric about zero.
pub(crate) trait Kernel {
    fn log_cdf(x: f64) -> f64;
    fn log_pdf(x: f64) -> f64;
    /// `P(0 < Z < x)` for `x ≥ 0`.
    fn central(x: f64) -> f64;
    fn draw<R: Rng + ?Sized>(rng: &mut R) -> f64;

    fn log_sf(x: f64) -> f64 {
        Self::log_cdf(-x)
    }
}

pub(crate) struct NormalKernel;
pub(crate) struct LaplaceKernel;
pub(crate) struct LogisticKernel;

impl Kernel for NormalKernel {
    fn log_cdf(x: f64) -> f64 {
        norm_log_cdf(x)
    }
    fn log_pdf(x: f64) -> f64 {
        norm_log_pdf(x)
    }
    fn central(x: f64) -> f64 {
        norm_central(x)
    }
    fn draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        rng.sample(StandardNormal)
    }
}

impl Kernel for LaplaceKernel {
    fn log_cdf(x: f64) -> f64 {
        if x < 0.0 {
            x - std::f64::consts::LN_2
        } else {
            (-0.5 * (-x).exp()).ln_1p()
        }
    }
    fn log_pdf(x: f64) -> f64 {
        -x.abs() - std::f64::consts::LN_2
    }
    fn central(x: f64) -> f64 {
        -0.5 * (-x).exp_m1()
    }
    fn draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        let u = u - 0.5;
        -u.signum() * (-2.0 * u.abs()).ln_1p()
    }
}

impl Kernel for LogisticKernel {
    fn log_cdf(x: f64) -> f64 {
        -softplus(-x)
    }
    fn log_pdf(x: f64) -> f64 {
        -softplus(-x) - softplus(x)
    }
    fn central(x: f64) -> f64 {
        0.5 * (0.5 * x).tanh()
    }
    fn draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        (u / (1.0 - u)).ln()
    }
}

/// `ln P(a < Z < b)` for `a < b`, either edge possibly infinite.
pub(crate) fn log_bin_mass<K: Kernel>(a: f64, b: f64) -> f64 {
    let tail = |x: f64, f: fn(f64) -> f64| if x.is_infinite() { f64::NEG_INFINITY } else { f(x) };
    if a >= 0.0 {
        let (sa, sb) = (K::log_sf(a), tail(b, K::log_sf));
        if sa == f64::NEG_INFINITY {
            return sa;
        }
        sa + log1mexp_unchecked(sb - sa)
    } else if b <= 0.0 {
        let (ca, cb) = (tail(a, K::log_cdf), K::log_cdf(b));
        if cb == f64::NEG_INFINITY {
            return cb;
        }
        cb + log1mexp_unchecked(ca - cb)
    } else {
        let left = if a == f64::NEG_INFINITY { 0.5 } else { K::central(-a) };
        let right = if b == f64::INFINITY { 0.5 } else { K::central(b) };
        (left + right).ln()
    }
}

/// Standardized bin edges of `n`, with the tails folded into edge bins.
fn edges(n: i64, mu: f64, scale: f64, support: Support) -> (f64, f64) {
    let a = if support.low() == Some(n) {
        f64::NEG_INFINITY
    } else {
        (n as f64 - 0.5 - mu) / scale
    };
    let b = if support.high() == Some(n) {
        f64::INFINITY
    } else {
        (n as f64 + 0.5 - mu) / scale
    };
    (a, b)
}

fn rounded_log_prob<K: Kernel>(n: i64, mu: f64, scale: f64, support: Support) -> Result<f64> {
    support.check(n)?;
    let (a, b) = edges(n, mu, scale, support);
    Ok(log_bin_mass::<K>(a, b))
}

/// Partials with respect to `(μ, scale)`.
fn rounded_grad<K: Kernel>(n: i64, mu: f64, scale: f64, support: Support) -> Result<(f64, f64)> {
    support.check(n)?;
    let (a, b) = edges(n, mu, scale, support);
    let lp = log_bin_mass::<K>(a, b);
    // density at an edge relative to the bin mass; zero at infinite edges
    let rel = |x: f64| {
        if x.is_infinite() {
            (0.0, 0.0)
        } else {
            let r = (K::log_pdf(x) - lp).exp();
            (r, r * x)
        }
    };
    let (ra, xa) = rel(a);
    let (rb, xb) = rel(b);
    Ok(((ra - rb) / scale, (xa - xb) / scale))
}

fn rounded_sample<K: Kernel, R: Rng + ?Sized>(mu: f64, scale: f64, support: Support, rng: &mut R) -> Result<i64> {
    if support.is_empty() {
        return Err(Error::EmptySupport(support));
    }
    let x = mu + scale * K::draw(rng);
    Ok(support.clamp(round_half_up(x)?))
}

fn finite(v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite(v));
    }
    Ok(v)
}

fn positive(v: f64) -> Result<f64> {
    Ok(finite(v)?.max(EPS))
}

macro_rules! rounded_family {
    ($(#[$doc:meta])* $name:ident, $kernel:ident, $scale:ident, $variant:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $name {
            mu: f64,
            $scale: f64,
        }

        impl $name {
            /// The scale is clamped below at `1e-6`.
            pub fn new(mu: f64, $scale: f64) -> Result<Self> {
                Ok(Self {
                    mu: finite(mu)?,
                    $scale: positive($scale)?,
                })
            }

            pub fn mu(&self) -> f64 {
                self.mu
            }

            pub fn $scale(&self) -> f64 {
                self.$scale
            }
        }

        impl Discrete for $name {
            fn log_prob(&self, n: i64, support: Support) -> Result<f64> {
                rounded_log_prob::<$kernel>(n, self.mu, self.$scale, support)
            }

            fn grad_log_prob(&self, n: i64, support: Support) -> Result<GradRecord> {
                let (dm, ds) = rounded_grad::<$kernel>(n, self.mu, self.$scale, support)?;
                Ok(GradRecord::from_pairs([("mu", dm), (stringify!($scale), ds)]))
            }

            /// Rounding does not preserve the mean, so this is always a sum
            /// over the enumerated masses.
            fn mean(&self, support: Support) -> Result<f64> {
                oracle::moment(&Params::$variant(*self), support, 1)
            }

            fn sample<R: Rng + ?Sized>(&self, support: Support, rng: &mut R) -> Result<i64> {
                rounded_sample::<$kernel, R>(self.mu, self.$scale, support, rng)
            }
        }
    };
}

rounded_family!(
    /// Rounded normal with location `mu` and standard deviation `sigma`.
    DNormalParams, NormalKernel, sigma, DNormal
);
rounded_family!(
    /// Rounded Laplace with location `mu` and scale `b`.
    DLaplaceParams, LaplaceKernel, b, DLaplace
);
rounded_family!(
    /// Rounded logistic with location `mu` and scale `s`.
    DLogisticParams, LogisticKernel, s, DLogistic
);

/// Discrete Weibull with scale `alpha` and shape `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DWeibullParams {
    alpha: f64,
    beta: f64,
}

/// `(x/α)^β` together with its partials in `α` and `β`.
fn weibull_term(x: f64, alpha: f64, beta: f64) -> (f64, f64, f64) {
    if x == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let log_ratio = x.ln() - alpha.ln();
    let t = (beta * log_ratio).exp();
    (t, -beta * t / alpha, t * log_ratio)
}

impl DWeibullParams {
    /// Both parameters are clamped below at `1e-6`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Ok(Self {
            alpha: positive(alpha)?,
            beta: positive(beta)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn check_support(&self, n: i64, support: Support) -> Result<()> {
        if !matches!(support, Support::LowerBounded(0) | Support::Bounded(0, _)) {
            return Err(Error::UnsupportedSupport {
                family: "dweib",
                support,
            });
        }
        support.check(n)
    }

    /// `u − v` computed without cancellation.
    fn log_ratio_gap(&self, x: f64, u: f64, v: f64) -> f64 {
        if x == 0.0 || u == 0.0 {
            -v
        } else {
            -u * (self.beta * (1.0 / x).ln_1p()).exp_m1()
        }
    }
}

impl Discrete for DWeibullParams {
    fn log_prob(&self, n: i64, support: Support) -> Result<f64> {
        self.check_support(n, support)?;
        let x = n as f64;
        let (u, _, _) = weibull_term(x, self.alpha, self.beta);
        if u == f64::INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        if support.high() == Some(n) {
            return Ok(-u);
        }
        let (v, _, _) = weibull_term(x + 1.0, self.alpha, self.beta);
        let d = self.log_ratio_gap(x, u, v);
        Ok(-u + log1mexp_unchecked(d))
    }

    fn grad_log_prob(&self, n: i64, support: Support) -> Result<GradRecord> {
        self.check_support(n, support)?;
        let x = n as f64;
        let (u, ua, ub) = weibull_term(x, self.alpha, self.beta);
        let (da, db) = if support.high() == Some(n) {
            (-ua, -ub)
        } else {
            let (v, va, vb) = weibull_term(x + 1.0, self.alpha, self.beta);
            let d = self.log_ratio_gap(x, u, v);
            // d/dd ln(1 − e^d), which vanishes once e^d underflows
            let dl = -1.0 / (-d).exp_m1();
            if dl == 0.0 {
                (-ua, -ub)
            } else {
                (-ua + dl * (ua - va), -ub + dl * (ub - vb))
            }
        };
        Ok(GradRecord::from_pairs([("alpha", da), ("beta", db)]))
    }

    fn mean(&self, support: Support) -> Result<f64> {
        oracle::moment(&Params::DWeibull(*self), support, 1)
    }

    /// `⌊X⌋` for a continuous Weibull draw `X = α (−ln U)^(1/β)`.
    fn sample<R: Rng + ?Sized>(&self, support: Support, rng: &mut R) -> Result<i64> {
        self.check_support(0, support)?;
        let u: f64 = rng.sample(Open01);
        let x = self.alpha * (-u.ln()).powf(1.0 / self.beta);
        Ok(support.clamp(x.floor() as i64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Composite Simpson rule, enough for smooth integrands over a unit bin.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut s = f(a) + f(b);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn normal_central_bin() {
        let d = DNormalParams::new(0.0, 1.0).unwrap();
        let lp = d.log_prob(0, Support::Unbounded).unwrap();
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let quad = simpson(pdf, -0.5, 0.5, 2000);
        assert!((lp.exp() - quad).abs() < 1e-12);
        assert!((lp.exp() - 0.382925).abs() < 1e-6);
    }

    #[test]
    fn laplace_central_bin() {
        let d = DLaplaceParams::new(0.0, 1.0).unwrap();
        let lp = d.log_prob(0, Support::Unbounded).unwrap();
        let closed = 1.0 - (-0.5f64).exp();
        assert!((lp - closed.ln()).abs() < 1e-14);
        let quad = simpson(|x: f64| 0.5 * (-x.abs()).exp(), 0.0, 0.5, 2000) * 2.0;
        assert!((lp.exp() - quad).abs() < 1e-12);
    }

    #[test]
    fn logistic_central_bin() {
        let d = DLogisticParams::new(0.0, 1.0).unwrap();
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let lp = d.log_prob(0, Support::Unbounded).unwrap();
        assert!((lp.exp() - (sig(0.5) - sig(-0.5))).abs() < 1e-15);
    }

    #[test]
    fn far_tail_bins_are_finite() {
        let d = DNormalParams::new(0.0, 1.0).unwrap();
        let far = d.log_prob(40, Support::Unbounded).unwrap();
        assert!(far.is_finite() && far < -700.0);
        let far = d.log_prob(-40, Support::Unbounded).unwrap();
        assert!(far.is_finite());
        let d = DLaplaceParams::new(0.0, 0.01).unwrap();
        assert!(d.log_prob(100, Support::Unbounded).unwrap().is_finite());
    }

    #[test]
    fn edge_bins_absorb_tails() {
        let s = Support::bounded(0, 255).unwrap();
        let d = DNormalParams::new(-10.0, 1.0).unwrap();
        assert!(d.log_prob(0, s).unwrap().abs() < 1e-15);
        let d = DNormalParams::new(300.0, 1.0).unwrap();
        assert!(d.log_prob(255, s).unwrap().abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = DNormalParams::new(-10.0, 1.0).unwrap();
        assert!((0..1000).all(|_| d.sample(s, &mut rng).unwrap() == 0));
    }

    #[test]
    fn telescoping_normalization() {
        let d = DLogisticParams::new(0.3, 2.0).unwrap();
        let total: f64 = (-200..=200).map(|n| d.log_prob(n, Support::Unbounded).unwrap().exp()).sum();
        assert!((total - 1.0).abs() < 1e-10);
        let s = Support::bounded(-3, 4).unwrap();
        let total: f64 = (-3..=4).map(|n| d.log_prob(n, s).unwrap().exp()).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn symmetric_point_has_zero_location_gradient() {
        let d = DNormalParams::new(5.0, 1.3).unwrap();
        let g = d.grad_log_prob(5, Support::Unbounded).unwrap();
        assert!(g.get("mu").unwrap().abs() < 1e-15);
    }

    #[test]
    fn weibull_geometric_case() {
        let d = DWeibullParams::new(1.0, 1.0).unwrap();
        let lp = d.log_prob(0, Support::NONNEG).unwrap();
        assert!((lp - (1.0 - (-1f64).exp()).ln()).abs() < 1e-15);
        let lp = d.log_prob(3, Support::NONNEG).unwrap();
        let closed = (1.0 - (-1f64).exp()) * (-3f64).exp();
        assert!((lp - closed.ln()).abs() < 1e-14);
        assert!(d.log_prob(-1, Support::NONNEG).is_err());
        assert!(d.log_prob(0, Support::Unbounded).is_err());
    }

    #[test]
    fn weibull_telescopes() {
        let d = DWeibullParams::new(2.5, 1.3).unwrap();
        let n = 30;
        let total: f64 = (0..=n).map(|x| d.log_prob(x, Support::NONNEG).unwrap().exp()).sum();
        let closed = 1.0 - (-((n as f64 + 1.0) / 2.5).powf(1.3)).exp();
        assert!((total - closed).abs() < 1e-14);
        let s = Support::bounded(0, 6).unwrap();
        let total: f64 = (0..=6).map(|x| d.log_prob(x, s).unwrap().exp()).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weibull_never_nan() {
        for &a in &[1e-6, 1e-3, 1.0, 1e3, 1e6] {
            for &b in &[1e-6, 1e-3, 1.0, 1e3, 1e6] {
                let d = DWeibullParams::new(a, b).unwrap();
                for &x in &[0, 1, 2, 10, 1000, 1_000_000] {
                    let lp = d.log_prob(x, Support::NONNEG).unwrap();
                    assert!(!lp.is_nan() && lp <= 0.0, "a={a} b={b} x={x}: {lp}");
                    let g = d.grad_log_prob(x, Support::NONNEG).unwrap();
                    if lp > -700.0 {
                        assert!(g.values().iter().all(|v| !v.is_nan()), "a={a} b={b} x={x}: {g}");
                    }
                }
            }
        }
    }

    #[test]
    fn scales_are_clamped() {
        assert_eq!(DNormalParams::new(0.0, 0.0).unwrap().sigma(), EPS);
        assert_eq!(DWeibullParams::new(-1.0, 2.0).unwrap().alpha(), EPS);
        assert!(DLaplaceParams::new(f64::NAN, 1.0).is_err());
    }
}
