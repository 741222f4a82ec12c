use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The set of integers that may carry probability mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Support {
    Unbounded,
    /// `[low, +inf)`
    LowerBounded(i64),
    /// `(-inf, high]`
    UpperBounded(i64),
    /// `[low, high]`, both inclusive.
    Bounded(i64, i64),
}

impl Support {
    /// Nonnegative integers.
    pub const NONNEG: Support = Support::LowerBounded(0);

    pub fn bounded(low: i64, high: i64) -> Result<Self> {
        if low > high {
            return Err(Error::InvalidSupport(format!("low {low} > high {high}")));
        }
        Ok(Support::Bounded(low, high))
    }

    pub fn contains(&self, n: i64) -> bool {
        match *self {
            Support::Unbounded => true,
            Support::LowerBounded(l) => n >= l,
            Support::UpperBounded(u) => n <= u,
            Support::Bounded(l, u) => l <= n && n <= u,
        }
    }

    pub fn low(&self) -> Option<i64> {
        match *self {
            Support::LowerBounded(l) | Support::Bounded(l, _) => Some(l),
            _ => None,
        }
    }

    pub fn high(&self) -> Option<i64> {
        match *self {
            Support::UpperBounded(u) | Support::Bounded(_, u) => Some(u),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(*self, Support::Bounded(l, u) if l > u)
    }

    /// Number of integers in the support, `None` if infinite.
    pub fn size(&self) -> Option<u64> {
        match *self {
            Support::Bounded(l, u) if l <= u => Some((u as i128 - l as i128 + 1) as u64),
            Support::Bounded(..) => Some(0),
            _ => None,
        }
    }

    /// Clamp `n` to the nearest member of the support.
    pub fn clamp(&self, n: i64) -> i64 {
        let n = self.low().map_or(n, |l| n.max(l));
        self.high().map_or(n, |u| n.min(u))
    }

    /// Mirror image under `n -> -n`.
    pub fn negated(&self) -> Support {
        match *self {
            Support::Unbounded => Support::Unbounded,
            Support::LowerBounded(l) => Support::UpperBounded(-l),
            Support::UpperBounded(u) => Support::LowerBounded(-u),
            Support::Bounded(l, u) => Support::Bounded(-u, -l),
        }
    }

    pub(crate) fn check(&self, n: i64) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptySupport(*self));
        }
        if !self.contains(n) {
            return Err(Error::OutOfSupport { n, support: *self });
        }
        Ok(())
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Support::Unbounded => write!(f, "unbounded"),
            Support::LowerBounded(0) => write!(f, "nonneg"),
            Support::LowerBounded(l) => write!(f, "{l}:"),
            Support::UpperBounded(u) => write!(f, ":{u}"),
            Support::Bounded(l, u) => write!(f, "{l}:{u}"),
        }
    }
}

/// Parses `unbounded`, `nonneg`, `l:u`, `l:` or `:u`.
impl FromStr for Support {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "unbounded" => return Ok(Support::Unbounded),
            "nonneg" => return Ok(Support::NONNEG),
            _ => {}
        }
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidSupport(format!("cannot parse {s:?}")))?;
        let parse = |t: &str| -> Result<Option<i64>> {
            if t.is_empty() {
                return Ok(None);
            }
            t.parse::<i64>()
                .map(Some)
                .map_err(|_| Error::InvalidSupport(format!("bad bound {t:?} in {s:?}")))
        };
        match (parse(lo)?, parse(hi)?) {
            (None, None) => Ok(Support::Unbounded),
            (Some(l), None) => Ok(Support::LowerBounded(l)),
            (None, Some(u)) => Ok(Support::UpperBounded(u)),
            (Some(l), Some(u)) => Support::bounded(l, u),
        }
    }
}
