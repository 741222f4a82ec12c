//! The common interface over every family, and a closed enum of parameter
//! records so that heterogeneous code (mixtures, the oracle, the trainer)
//! can dispatch without trait objects.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::bitwise::BitwiseParams;
use crate::dalap::DalapParams;
use crate::danorm::{DanormParams, GAMMA_MAX};
use crate::discretized::{DLaplaceParams, DLogisticParams, DNormalParams, DWeibullParams};
use crate::error::{Error, Result};
use crate::numcore::{GradRecord, Support, EPS};

/// A distribution on the integers with continuous parameters.
pub trait Discrete {
    /// Log mass at `n`. Values outside `support` are an error, never `-inf`.
    fn log_prob(&self, n: i64, support: Support) -> Result<f64>;

    /// Partials of [`Discrete::log_prob`] with respect to each parameter.
    fn grad_log_prob(&self, n: i64, support: Support) -> Result<GradRecord>;

    fn mean(&self, support: Support) -> Result<f64>;

    fn sample<R: Rng + ?Sized>(&self, support: Support, rng: &mut R) -> Result<i64>;
}

/// Flat access to a parameter record, used by finite differences and the trainer.
pub trait Parametric: Sized {
    fn param_names(&self) -> Vec<String>;
    fn param_values(&self) -> Vec<f64>;
    /// Rebuild from values in [`Parametric::param_names`] order.
    fn with_param_values(&self, values: &[f64]) -> Result<Self>;
    /// Errors if any parameter sits within `margin` of a clamp boundary or of a
    /// point where `log_prob(n)` is not differentiable.
    fn check_margins(&self, n: i64, margin: f64) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Dalap,
    Danorm,
    DNormal,
    DLaplace,
    DLogistic,
    DWeibull,
    Bitwise,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Dalap,
        Family::Danorm,
        Family::DNormal,
        Family::DLaplace,
        Family::DLogistic,
        Family::DWeibull,
        Family::Bitwise,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Dalap => "dalap",
            Family::Danorm => "danorm",
            Family::DNormal => "dnormal",
            Family::DLaplace => "dlaplace",
            Family::DLogistic => "dlogistic",
            Family::DWeibull => "dweib",
            Family::Bitwise => "bitwise",
        }
    }

    /// Whether the family accepts `support`. Bitwise accepts any bounded
    /// request and serves it with the smallest covering variant.
    pub fn accepts(&self, support: Support) -> bool {
        match self {
            Family::DWeibull => matches!(support, Support::LowerBounded(0) | Support::Bounded(0, _)),
            Family::Bitwise => matches!(support, Support::Bounded(..)),
            _ => true,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family {s:?}")))
    }
}

/// Parameters of one member of any family.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Dalap(DalapParams),
    Danorm(DanormParams),
    DNormal(DNormalParams),
    DLaplace(DLaplaceParams),
    DLogistic(DLogisticParams),
    DWeibull(DWeibullParams),
    Bitwise(BitwiseParams),
}

macro_rules! dispatch {
    ($self:expr, $p:ident => $e:expr) => {
        match $self {
            Params::Dalap($p) => $e,
            Params::Danorm($p) => $e,
            Params::DNormal($p) => $e,
            Params::DLaplace($p) => $e,
            Params::DLogistic($p) => $e,
            Params::DWeibull($p) => $e,
            Params::Bitwise($p) => $e,
        }
    };
}

impl Params {
    pub fn family(&self) -> Family {
        match self {
            Params::Dalap(_) => Family::Dalap,
            Params::Danorm(_) => Family::Danorm,
            Params::DNormal(_) => Family::DNormal,
            Params::DLaplace(_) => Family::DLaplace,
            Params::DLogistic(_) => Family::DLogistic,
            Params::DWeibull(_) => Family::DWeibull,
            Params::Bitwise(_) => Family::Bitwise,
        }
    }

    /// Build from values in canonical order. Bitwise needs its layout
    /// (`k` magnitude bits, signed flag) since the value count alone is ambiguous.
    pub fn from_values(family: Family, values: &[f64], layout: Option<(usize, bool)>) -> Result<Self> {
        let need = |n: usize| -> Result<()> {
            if values.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "{family} takes {n} parameters, got {}",
                    values.len()
                )));
            }
            Ok(())
        };
        Ok(match family {
            Family::Dalap => {
                need(2)?;
                Params::Dalap(DalapParams::new(values[0], values[1])?)
            }
            Family::Danorm => {
                need(2)?;
                Params::Danorm(DanormParams::new(values[0], values[1])?)
            }
            Family::DNormal => {
                need(2)?;
                Params::DNormal(DNormalParams::new(values[0], values[1])?)
            }
            Family::DLaplace => {
                need(2)?;
                Params::DLaplace(DLaplaceParams::new(values[0], values[1])?)
            }
            Family::DLogistic => {
                need(2)?;
                Params::DLogistic(DLogisticParams::new(values[0], values[1])?)
            }
            Family::DWeibull => {
                need(2)?;
                Params::DWeibull(DWeibullParams::new(values[0], values[1])?)
            }
            Family::Bitwise => {
                let (k, signed) = layout
                    .ok_or_else(|| Error::InvalidParameter("bitwise needs a bit count".into()))?;
                need(k + signed as usize)?;
                let (pi_pos, probs) = if signed {
                    (Some(values[0]), &values[1..])
                } else {
                    (None, values)
                };
                Params::Bitwise(BitwiseParams::new(probs.to_vec(), pi_pos)?)
            }
        })
    }

    /// Build from `name = value` assignments. For Bitwise, `pi` sets every
    /// magnitude bit at once.
    pub fn from_assignments(family: Family, pairs: &[(String, f64)], layout: Option<(usize, bool)>) -> Result<Self> {
        let names = canonical_names(family, layout)?;
        let mut values = vec![f64::NAN; names.len()];
        for (name, v) in pairs {
            if family == Family::Bitwise && name == "pi" {
                for (slot, n) in values.iter_mut().zip(&names) {
                    if n != "pi_pos" {
                        *slot = *v;
                    }
                }
                continue;
            }
            let i = names.iter().position(|n| n == name).ok_or_else(|| {
                Error::InvalidParameter(format!("{family} has no parameter {name:?} (expected {})", names.join(", ")))
            })?;
            values[i] = *v;
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::InvalidParameter(format!("missing value for {}", names[i])));
        }
        Params::from_values(family, &values, layout)
    }

    /// Support actually served for a requested one. Equal to the request
    /// except for Bitwise, whose support is fixed by its bit layout.
    pub fn effective_support(&self, requested: Support) -> Result<Support> {
        match self {
            Params::Bitwise(b) => Ok(b.support()),
            _ if !self.family().accepts(requested) => Err(Error::UnsupportedSupport {
                family: self.family().name(),
                support: requested,
            }),
            _ => Ok(requested),
        }
    }

    /// Log mass and gradient for training. Danorm skips its window check so an
    /// early, badly placed location still yields a finite (tiny) mass.
    pub fn training_terms(&self, n: i64, support: Support) -> Result<(f64, GradRecord)> {
        match self {
            Params::Danorm(d) => {
                support.check(n)?;
                d.log_prob_and_grad_unchecked(n, support)
            }
            _ => Ok((self.log_prob(n, support)?, self.grad_log_prob(n, support)?)),
        }
    }
}

/// Parameter names in canonical order.
pub fn canonical_names(family: Family, layout: Option<(usize, bool)>) -> Result<Vec<String>> {
    let two = |a: &str, b: &str| vec![a.to_string(), b.to_string()];
    Ok(match family {
        Family::Dalap | Family::Danorm => two("mu", "gamma"),
        Family::DNormal => two("mu", "sigma"),
        Family::DLaplace => two("mu", "b"),
        Family::DLogistic => two("mu", "s"),
        Family::DWeibull => two("alpha", "beta"),
        Family::Bitwise => {
            let (k, signed) = layout.ok_or_else(|| Error::InvalidParameter("bitwise needs a bit count".into()))?;
            crate::bitwise::param_names(k, signed)
        }
    })
}

impl Discrete for Params {
    fn log_prob(&self, n: i64, support: Support) -> Result<f64> {
        dispatch!(self, p => p.log_prob(n, support))
    }

    fn grad_log_prob(&self, n: i64, support: Support) -> Result<GradRecord> {
        dispatch!(self, p => p.grad_log_prob(n, support))
    }

    fn mean(&self, support: Support) -> Result<f64> {
        dispatch!(self, p => p.mean(support))
    }

    fn sample<R: Rng + ?Sized>(&self, support: Support, rng: &mut R) -> Result<i64> {
        dispatch!(self, p => p.sample(support, rng))
    }
}

fn keep_away(name: &str, value: f64, lo: f64, hi: f64, margin: f64) -> Result<()> {
    if value - lo <= margin || hi - value <= margin {
        return Err(Error::BoundaryProximity {
            name: name.to_string(),
            value,
            margin,
        });
    }
    Ok(())
}

fn keep_off_integers(name: &str, value: f64, margin: f64) -> Result<()> {
    if (value - value.round()).abs() <= margin {
        return Err(Error::BoundaryProximity {
            name: name.to_string(),
            value,
            margin,
        });
    }
    Ok(())
}

impl Parametric for Params {
    fn param_names(&self) -> Vec<String> {
        let layout = match self {
            Params::Bitwise(b) => Some(b.layout()),
            _ => None,
        };
        canonical_names(self.family(), layout).expect("layout known")
    }

    fn param_values(&self) -> Vec<f64> {
        match self {
            Params::Dalap(p) => vec![p.mu(), p.gamma()],
            Params::Danorm(p) => vec![p.mu(), p.gamma()],
            Params::DNormal(p) => vec![p.mu(), p.sigma()],
            Params::DLaplace(p) => vec![p.mu(), p.b()],
            Params::DLogistic(p) => vec![p.mu(), p.s()],
            Params::DWeibull(p) => vec![p.alpha(), p.beta()],
            Params::Bitwise(p) => p.values(),
        }
    }

    fn with_param_values(&self, values: &[f64]) -> Result<Self> {
        match self {
            Params::Danorm(d) => {
                if values.len() != 2 {
                    return Err(Error::InvalidParameter("danorm takes 2 parameters".into()));
                }
                Ok(Params::Danorm(DanormParams::with_window(values[0], values[1], d.window())?))
            }
            Params::Bitwise(b) => Params::from_values(Family::Bitwise, values, Some(b.layout())),
            _ => Params::from_values(self.family(), values, None),
        }
    }

    fn check_margins(&self, _n: i64, margin: f64) -> Result<()> {
        match self {
            Params::Dalap(p) => {
                keep_away("gamma", p.gamma(), EPS, 1.0 - EPS, margin)?;
                // |n - mu| and the split between floor and ceiling kink at integers
                keep_off_integers("mu", p.mu(), margin)
            }
            Params::Danorm(p) => keep_away("gamma", p.gamma(), EPS, GAMMA_MAX, margin),
            Params::DNormal(p) => keep_away("sigma", p.sigma(), EPS, f64::INFINITY, margin),
            Params::DLaplace(p) => keep_away("b", p.b(), EPS, f64::INFINITY, margin),
            Params::DLogistic(p) => keep_away("s", p.s(), EPS, f64::INFINITY, margin),
            Params::DWeibull(p) => {
                keep_away("alpha", p.alpha(), EPS, f64::INFINITY, margin)?;
                keep_away("beta", p.beta(), EPS, f64::INFINITY, margin)
            }
            Params::Bitwise(p) => {
                for (name, v) in p.names().iter().zip(p.values()) {
                    keep_away(name, v, EPS, 1.0 - EPS, margin)?;
                }
                Ok(())
            }
        }
    }
}

macro_rules! into_params {
    ($t:ty, $v:ident) => {
        impl From<$t> for Params {
            fn from(p: $t) -> Self {
                Params::$v(p)
            }
        }
    };
}

into_params!(DalapParams, Dalap);
into_params!(DanormParams, Danorm);
into_params!(DNormalParams, DNormal);
into_params!(DLaplaceParams, DLaplace);
into_params!(DLogisticParams, DLogistic);
into_params!(DWeibullParams, DWeibull);
into_params!(BitwiseParams, Bitwise);
