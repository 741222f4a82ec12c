//! The property suite behind `intdist check`: every closed form and
//! gradient compared against the oracle on a fixed grid.

use std::fmt;

use crate::bitwise::BitwiseParams;
use crate::dalap::DalapParams;
use crate::danorm::DanormParams;
use crate::dist::{Discrete, Family, Params};
use crate::mixture::MixtureParams;
use crate::numcore::Support;
use crate::oracle::{self, Enumerable};

#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag}  {:<34} {}", self.name, self.detail)
    }
}

/// Tracks the worst violation seen for one property.
struct Worst {
    name: &'static str,
    tol: f64,
    value: f64,
    at: String,
    failures: Vec<String>,
}

impl Worst {
    fn new(name: &'static str, tol: f64) -> Self {
        Self {
            name,
            tol,
            value: 0.0,
            at: String::new(),
            failures: Vec::new(),
        }
    }

    // negated so a NaN error counts as a failure
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn see(&mut self, err: f64, at: impl FnOnce() -> String) {
        let at = at();
        if !(err <= self.tol) {
            self.failures.push(at.clone());
        }
        if !(err <= self.value) {
            self.value = err;
            self.at = at;
        }
    }

    fn error(&mut self, at: String, e: impl fmt::Display) {
        self.value = f64::INFINITY;
        self.failures.push(format!("{at}: {e}"));
        self.at = format!("{at}: {e}");
    }

    fn row(self) -> CheckRow {
        CheckRow {
            name: self.name.to_string(),
            passed: self.failures.is_empty(),
            detail: format!("worst {:.2e} (tol {:.0e}) at {}", self.value, self.tol, self.at),
        }
    }
}

fn p(f: Family, v: &[f64]) -> Params {
    Params::from_values(f, v, None).expect("valid grid point")
}

/// Parameter and support grid shared by several checks.
pub fn grid() -> Vec<(MixtureParams, Support)> {
    let b = |l, u| Support::Bounded(l, u);
    let single: Vec<(Params, Support)> = vec![
        (p(Family::Dalap, &[0.0, 0.5]), Support::Unbounded),
        (p(Family::Dalap, &[0.0, 0.5]), Support::NONNEG),
        (p(Family::Dalap, &[0.25, 0.5]), Support::Unbounded),
        (p(Family::Dalap, &[3.7, 0.3]), Support::NONNEG),
        (p(Family::Dalap, &[-2.4, 0.8]), Support::LowerBounded(-5)),
        (p(Family::Dalap, &[1.5, 0.6]), Support::UpperBounded(3)),
        (p(Family::Dalap, &[3.7, 0.2]), b(0, 10)),
        (p(Family::Dalap, &[-30.0, 0.9]), b(0, 10)),
        (p(Family::Danorm, &[0.0, 0.5]), Support::Unbounded),
        (p(Family::Danorm, &[3.2, 0.9]), Support::NONNEG),
        (p(Family::Danorm, &[128.0, 0.95]), b(0, 255)),
        (p(Family::DNormal, &[0.3, 1.7]), Support::Unbounded),
        (p(Family::DNormal, &[300.0, 1.0]), b(0, 255)),
        (p(Family::DLaplace, &[1.7, 0.6]), Support::Unbounded),
        (p(Family::DLaplace, &[-1.2, 3.0]), Support::NONNEG),
        (p(Family::DLogistic, &[4.1, 2.5]), Support::Unbounded),
        (p(Family::DLogistic, &[0.5, 0.7]), b(-4, 4)),
        (p(Family::DWeibull, &[1.0, 1.0]), Support::NONNEG),
        (p(Family::DWeibull, &[2.5, 1.3]), Support::NONNEG),
        (p(Family::DWeibull, &[6.0, 0.7]), b(0, 20)),
        (
            Params::Bitwise(BitwiseParams::new(vec![0.1, 0.7, 0.4, 0.9, 0.2, 0.55, 0.3, 0.8], None).unwrap()),
            b(0, 255),
        ),
        (
            Params::Bitwise(BitwiseParams::new(vec![0.6, 0.3, 0.8, 0.45], Some(0.35)).unwrap()),
            b(-15, 15),
        ),
    ];
    let mut out: Vec<(MixtureParams, Support)> =
        single.iter().map(|(c, s)| (MixtureParams::from(c.clone()), *s)).collect();
    // K = 4 mixtures: shift the location (or the bits) of each grid point
    for (c, s) in &single {
        let comps: Vec<Params> = (0..4)
            .map(|i| {
                let mut v = match c {
                    Params::Bitwise(b) => b.values(),
                    _ => crate::dist::Parametric::param_values(c),
                };
                match c {
                    Params::Bitwise(_) => v.iter_mut().for_each(|x| *x = (*x + 0.13 * i as f64) % 1.0),
                    Params::DWeibull(_) => v[0] *= 1.0 + 0.4 * i as f64,
                    _ => v[0] += 1.3 * i as f64 - 2.0,
                }
                crate::dist::Parametric::with_param_values(c, &v).expect("valid shift")
            })
            .collect();
        let mix = MixtureParams::new(vec![0.4, -0.3, 0.0, 1.1], comps).expect("homogeneous");
        out.push((mix, *s));
    }
    out
}

fn describe(m: &MixtureParams, s: Support) -> String {
    format!("{} k={} {:?} on {s}", m.family(), m.k(), crate::dist::Parametric::param_values(m))
}

fn normalization() -> CheckRow {
    let mut w = Worst::new("normalization", 1e-8);
    for (m, s) in grid() {
        match oracle::enumerate_pmf(&m, s) {
            Ok((_, masses)) => {
                let total: f64 = masses.iter().sum();
                w.see((total - 1.0).abs(), || describe(&m, s));
            }
            Err(e) => w.error(describe(&m, s), e),
        }
    }
    w.row()
}

fn reference_agreement() -> CheckRow {
    let mut w = Worst::new("oracle PMF vs exp(log_prob)", 1e-12);
    for (m, s) in grid() {
        let pair = oracle::enumerate_pmf(&m, s).and_then(|a| Ok((a, oracle::reference_pmf(&m, s)?)));
        match pair {
            Ok(((_, a), (_, r))) => {
                let err = a.iter().zip(&r).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                w.see(err, || describe(&m, s));
            }
            Err(e) => w.error(describe(&m, s), e),
        }
    }
    w.row()
}

fn integer_reduction() -> CheckRow {
    let mut w = Worst::new("dalap integer-location reduction", 1e-12);
    for mu in [-7, -1, 0, 2, 13] {
        for g in [0.05, 0.3, 0.5, 0.77, 0.95] {
            let d = DalapParams::new(mu as f64, g).unwrap();
            for n in mu - 6..=mu + 6 {
                let lp = d.log_prob(n, Support::Unbounded).unwrap();
                let eq = ((1.0 - g) / (1.0 + g)).ln() + (n - mu).abs() as f64 * g.ln();
                w.see((lp - eq).abs(), || format!("mu={mu} gamma={g} n={n}"));
            }
        }
    }
    w.row()
}

/// Relative gradient error with a small absolute floor for near-zero partials.
pub fn grad_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-2)
}

fn gradients() -> CheckRow {
    let mut w = Worst::new("gradients vs finite differences", 1e-4);
    for (m, s) in grid() {
        let s = m.served_support(s).unwrap();
        let (low, high) = match oracle::enumerate_pmf(&m, s) {
            Ok((win, _)) => (win.low, win.high),
            Err(e) => {
                w.error(describe(&m, s), e);
                continue;
            }
        };
        let step = ((high - low) / 6).max(1);
        let mut n = low;
        while n <= high {
            if m.log_prob(n, s).is_ok_and(|lp| lp > -30.0) {
                match (m.grad_log_prob(n, s), oracle::fd_grad(&m, n, s, 1e-5)) {
                    (Ok(a), Ok(f)) => {
                        for ((name, x), (_, y)) in a.iter().zip(f.iter()) {
                            w.see(grad_error(x, y), || format!("{} n={n} d/d{name}", describe(&m, s)));
                        }
                    }
                    (Err(e), _) => w.error(describe(&m, s), e),
                    // too close to a kink for finite differences
                    (_, Err(_)) => {}
                }
            }
            n += step;
        }
    }
    w.row()
}

fn dalap_closed_mean() -> CheckRow {
    let mut w = Worst::new("dalap closed-form mean", 1e-9);
    for mu in [-3.3, 0.25, 1.5, 2.0, 7.81] {
        for g in [0.1, 0.4, 0.7, 0.9] {
            let d = Params::Dalap(DalapParams::new(mu, g).unwrap());
            let closed = d.mean(Support::Unbounded).unwrap();
            match oracle::moment(&d, Support::Unbounded, 1) {
                Ok(e) => w.see((closed - e).abs(), || format!("mu={mu} gamma={g}")),
                Err(e) => w.error(format!("mu={mu} gamma={g}"), e),
            }
        }
    }
    w.row()
}

/// Mean and variance limits at a vanishing decay rate, at locations whose
/// floor/ceiling split is lopsided enough for `γ^|c − f|` to be below 1e-3.
fn small_gamma_limits() -> CheckRow {
    let mut w = Worst::new("small-gamma mean/variance limits", 1e-3);
    let g = 1e-6;
    for mu in [4.0, 2.1, -1.85, 7.95, 2.5, -0.5] {
        let half = (mu - f64::floor(mu) - 0.5f64).abs() < 1e-12;
        for d in [
            Params::Dalap(DalapParams::new(mu, g).unwrap()),
            Params::Danorm(DanormParams::new(mu, g).unwrap()),
        ] {
            let mean = oracle::moment(&d, Support::Unbounded, 1).unwrap();
            let var = oracle::variance(&d, Support::Unbounded).unwrap();
            let target_mean = if half { mu } else { mu.round() };
            let target_var = if half { 0.25 } else { 0.0 };
            let at = || format!("{} mu={mu}", d.family());
            w.see((mean - target_mean).abs(), at);
            w.see((var - target_var).abs(), at);
        }
    }
    w.row()
}

fn bitwise_means() -> CheckRow {
    let mut w = Worst::new("bitwise closed-form means", 1e-10);
    for (m, s) in grid() {
        if m.family() != Family::Bitwise {
            continue;
        }
        for c in m.components() {
            let closed = c.mean(s).unwrap();
            let e = oracle::moment(c, s, 1).unwrap();
            w.see((closed - e).abs(), || describe(&MixtureParams::from(c.clone()), s));
        }
    }
    w.row()
}

fn bitwise_variance_limit() -> CheckRow {
    let mut w = Worst::new("bitwise variance shrinks to 0", 0.0);
    let target = crate::bitwise::encode(11, 5, false).unwrap();
    let mut last = f64::INFINITY;
    for eps in [1e-2, 1e-4, 1e-6] {
        let probs = target.bits.iter().map(|&b| if b { 1.0 - eps } else { eps }).collect();
        let v = BitwiseParams::new(probs, None).unwrap().variance().unwrap();
        // count a non-decrease as a violation of size 1
        w.see(if v < last { 0.0 } else { 1.0 }, || format!("eps={eps} var={v:.3e}"));
        last = v;
    }
    w.see(if last < 1e-3 { 0.0 } else { 1.0 }, || format!("final var={last:.3e}"));
    w.row()
}

fn continuity() -> CheckRow {
    let mut w = Worst::new("continuity across integer mu", 1e-6);
    for mu in [-2.0, 0.0, 3.0] {
        for g in [0.2, 0.6, 0.95] {
            for n in [mu as i64 - 2, mu as i64, mu as i64 + 3] {
                for (lo, hi) in [(mu - 1e-9, mu), (mu, mu + 1e-9)] {
                    for f in [Family::Dalap, Family::Danorm] {
                        let a = p(f, &[lo, g]).log_prob(n, Support::Unbounded).unwrap();
                        let b = p(f, &[hi, g]).log_prob(n, Support::Unbounded).unwrap();
                        w.see((a - b).abs(), || format!("{f} mu={mu} gamma={g} n={n}"));
                    }
                }
            }
        }
    }
    w.row()
}

fn danorm_window_doubling() -> CheckRow {
    let mut w = Worst::new("danorm window doubling", 1e-12);
    for mu in [0.0, 0.4, 17.5] {
        for g in [0.5, 0.9, 0.95] {
            let a = DanormParams::with_window(mu, g, 500).unwrap().log_z_tilde(Support::Unbounded).unwrap();
            let b = DanormParams::with_window(mu, g, 1000).unwrap().log_z_tilde(Support::Unbounded).unwrap();
            w.see((a - b).abs(), || format!("mu={mu} gamma={g}"));
        }
    }
    w.row()
}

/// Run every property and return one row each.
pub fn run_all() -> Vec<CheckRow> {
    vec![
        normalization(),
        reference_agreement(),
        integer_reduction(),
        gradients(),
        dalap_closed_mean(),
        small_gamma_limits(),
        bitwise_means(),
        bitwise_variance_limit(),
        continuity(),
        danorm_window_doubling(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[cfg(not(feature = "printed-z1"))]
    #[test]
    fn reference_build_passes_everything() {
        for row in run_all() {
            assert!(row.passed, "{row}");
        }
    }

    #[cfg(feature = "printed-z1")]
    #[test]
    fn printed_exponent_breaks_normalization() {
        assert!(!normalization().passed);
    }
}
