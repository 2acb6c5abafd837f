use std::fmt;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use super::IntegerSet;
use crate::error::{Error, Result};

/// Open interval `(lo, hi)` with exact rational endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OpenRationalInterval {
    lo: Ratio<i128>,
    hi: Ratio<i128>,
}

impl OpenRationalInterval {
    pub fn new(lo_num: i128, lo_den: i128, hi_num: i128, hi_den: i128) -> Result<Self> {
        if lo_den <= 0 || hi_den <= 0 {
            return Err(Error::Config(
                "interval denominators must be positive".into(),
            ));
        }
        Self::from_ratios(Ratio::new(lo_num, lo_den), Ratio::new(hi_num, hi_den))
    }

    pub fn from_ratios(lo: Ratio<i128>, hi: Ratio<i128>) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidInterval {
                lo: lo.to_string(),
                hi: hi.to_string(),
            });
        }
        Ok(OpenRationalInterval { lo, hi })
    }

    /// Interval `(lo, hi)` with integer endpoints.
    pub fn integer(lo: i128, hi: i128) -> Result<Self> {
        Self::new(lo, 1, hi, 1)
    }

    /// `(a·n/d, b·n/d)` for the common pattern of multiples of a stage scale `n`.
    pub fn scaled(n: u64, a: i128, b: i128, d: i128) -> Result<Self> {
        let n = n as i128;
        Self::new(a * n, d, b * n, d)
    }

    pub fn lo(&self) -> Ratio<i128> {
        self.lo
    }

    pub fn hi(&self) -> Ratio<i128> {
        self.hi
    }

    /// Strict membership by exact cross-multiplication.
    pub fn contains(&self, n: i128) -> bool {
        *self.lo.numer() < n * *self.lo.denom() && n * *self.hi.denom() < *self.hi.numer()
    }

    /// `(a + (b-a)/100, b - (b-a)/100)`; an error if that holds no integer.
    pub fn core(&self) -> Result<Self> {
        let trim = (self.hi - self.lo) / Ratio::from_integer(100);
        let lo = self.lo + trim;
        let hi = self.hi - trim;
        let trimmed = OpenRationalInterval { lo, hi };
        let (first, last) = trimmed.integer_bounds();
        if lo >= hi || trim.is_zero() || first > last {
            return Err(Error::EmptyCore {
                lo: self.lo.to_string(),
                hi: self.hi.to_string(),
            });
        }
        Ok(trimmed)
    }

    /// Smallest integer strictly above `lo` and largest strictly below `hi`.
    pub fn integer_bounds(&self) -> (i128, i128) {
        (self.lo.floor().to_integer() + 1, self.hi.ceil().to_integer() - 1)
    }

    /// Integer members clipped to `[0, limit)`, as a half-open range.
    pub fn clipped_range(&self, limit: u64) -> (u64, u64) {
        let (first, last) = self.integer_bounds();
        let lo = first.max(0);
        let hi = (last + 1).min(limit as i128);
        if lo >= hi {
            return (0, 0);
        }
        (lo.to_u64().unwrap_or(0), hi.to_u64().unwrap_or(0))
    }

    /// Minkowski sum `(a + c, b + d)`.
    pub fn plus(&self, other: &Self) -> Self {
        OpenRationalInterval {
            lo: self.lo + other.lo,
            hi: self.hi + other.hi,
        }
    }

    /// `m - (a, b) = (m - b, m - a)`.
    pub fn reflected(&self, m: i128) -> Self {
        let m = Ratio::from_integer(m);
        OpenRationalInterval {
            lo: m - self.hi,
            hi: m - self.lo,
        }
    }
}

impl fmt::Display for OpenRationalInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// The integers of `[0, limit)` lying strictly inside `interval`.
pub fn integers_in(interval: &OpenRationalInterval, limit: u64) -> IntegerSet {
    let (lo, hi) = interval.clipped_range(limit);
    IntegerSet::range(lo, hi, limit)
}
