//! Exact half-open interval sets over rational endpoints.
//!
//! Pullbacks of windows through piecewise-monotone maps are finite unions of
//! intervals. The quantities built from them (symmetric-difference measures,
//! overlap measures) are small differences of large numbers, so everything
//! here is done in exact rational arithmetic; callers convert to `f64` only
//! at the very end.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

/// Hard cap on the number of components a pullback may produce.
pub const COMPONENT_LIMIT: usize = 1_000_000;

/// Exact rational from an `f64`. Every finite double is a dyadic rational,
/// so this is lossless.
pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// A finite union of disjoint half-open intervals `[lo, hi)`, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalSet {
    parts: Vec<(BigRational, BigRational)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { parts: Vec::new() }
    }

    /// Single interval `[lo, hi)`; empty if `lo >= hi`.
    pub fn interval(lo: BigRational, hi: BigRational) -> Self {
        if lo < hi {
            IntervalSet {
                parts: vec![(lo, hi)],
            }
        } else {
            IntervalSet::empty()
        }
    }

    /// Build from arbitrary (possibly overlapping, unsorted) intervals.
    pub fn from_parts(mut raw: Vec<(BigRational, BigRational)>) -> Self {
        raw.retain(|(lo, hi)| lo < hi);
        raw.sort_by(|a, b| a.0.cmp(&b.0));
        let mut parts: Vec<(BigRational, BigRational)> = Vec::with_capacity(raw.len());
        for (lo, hi) in raw {
            match parts.last_mut() {
                Some(last) if lo <= last.1 => {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                }
                _ => parts.push((lo, hi)),
            }
        }
        IntervalSet { parts }
    }

    pub fn parts(&self) -> &[(BigRational, BigRational)] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn measure(&self) -> BigRational {
        let mut m = BigRational::zero();
        for (lo, hi) in &self.parts {
            m += hi - lo;
        }
        m
    }

    pub fn translate(&self, by: &BigRational) -> Self {
        IntervalSet {
            parts: self
                .parts
                .iter()
                .map(|(lo, hi)| (lo + by, hi + by))
                .collect(),
        }
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        self.parts.iter().any(|(lo, hi)| lo <= x && x < hi)
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut raw = self.parts.clone();
        raw.extend(other.parts.iter().cloned());
        IntervalSet::from_parts(raw)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        // Linear merge over the two sorted lists.
        let mut out = Vec::new();
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.parts.len() && j < other.parts.len() {
            let (a_lo, a_hi) = &self.parts[i];
            let (b_lo, b_hi) = &other.parts[j];
            let lo = a_lo.max(b_lo).clone();
            let hi = a_hi.min(b_hi).clone();
            if lo < hi {
                out.push((lo, hi));
            }
            if a_hi <= b_hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { parts: out }
    }

    /// Measure of the symmetric difference, computed exactly.
    pub fn symmetric_difference_measure(&self, other: &Self) -> BigRational {
        let inter = self.intersect(other);
        self.measure() + other.measure() - rat_int(2) * inter.measure()
    }

    /// Guard against runaway component counts.
    pub fn check_budget(&self) -> Result<()> {
        if self.parts.len() > COMPONENT_LIMIT {
            Err(Error::IntervalBlowup {
                limit: COMPONENT_LIMIT,
            })
        } else {
            Ok(())
        }
    }

    /// Integral of the piecewise-constant overlap against a weight, i.e.
    /// sum of `w * measure(self ∩ [lo, hi))` over the given weighted pieces.
    pub fn weighted_overlap(&self, pieces: &[(BigRational, BigRational, BigRational)]) -> BigRational {
        let mut total = BigRational::zero();
        for (lo, hi, w) in pieces {
            if w.is_zero() {
                continue;
            }
            let piece = IntervalSet::interval(lo.clone(), hi.clone());
            total += w * self.intersect(&piece).measure();
        }
        total
    }

    /// Reduce every point modulo `period` into `[0, period)`.
    pub fn reduce_mod(&self, period: &BigRational) -> Self {
        let mut raw = Vec::new();
        for (lo, hi) in &self.parts {
            // Shift so that lo lands in [0, period), then split the carry.
            let k = (lo / period).floor();
            let mut lo = lo - &k * period;
            let mut hi = hi - &k * period;
            while lo < *period && hi > BigRational::zero() {
                let cut_hi = hi.clone().min(period.clone());
                if lo < cut_hi {
                    raw.push((lo.clone(), cut_hi.clone()));
                }
                lo -= period;
                hi -= period;
                if lo.is_negative() {
                    lo = BigRational::zero();
                }
            }
        }
        IntervalSet::from_parts(raw)
    }
}
