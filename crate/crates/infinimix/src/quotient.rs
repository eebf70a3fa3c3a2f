//! Exact interval arithmetic on the quotient circle.
//!
//! For a translation-invariant lift `T` with piecewise-affine rational
//! branches, the induced circle map `T_I = T mod p` has affine inverse
//! branches with rational coefficients, so preimages of rational interval
//! sets stay rational. Pulling the discontinuity set of a periodic
//! piecewise-constant observable back `n` steps gives `F o T^n` exactly as a
//! finite union of rational intervals — the engine behind exact correlation
//! values, window products and the fast window-average path.

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::interval::{rat, rat_int, IntervalSet};
use crate::maps::{AffineCellBranch, PiecewiseMap};
use crate::observables::PcProfile;

/// Pullback operator of the circle map `T mod period`.
pub struct CirclePullback {
    period: i64,
    branches: Vec<AffineCellBranch>,
}

impl CirclePullback {
    pub fn new(map: &PiecewiseMap, period: i64) -> Result<Self> {
        if period < 1 {
            return Err(Error::Precondition(format!("period must be >= 1, got {period}")));
        }
        let branches = map.affine_cell_branches().ok_or_else(|| {
            Error::Precondition(format!(
                "map {} has no affine cell branches; exact circle pullback unavailable",
                map.id()
            ))
        })?;
        Ok(CirclePullback { period, branches })
    }

    pub fn period(&self) -> i64 {
        self.period
    }

    /// `T_I^{-1}(a)` for a rational interval set `a` inside `[0, period)`.
    pub fn pull_once(&self, a: &IntervalSet) -> Result<IntervalSet> {
        let p = rat_int(self.period);
        let mut raw: Vec<(BigRational, BigRational)> = Vec::new();
        for c in 0..self.period {
            let cc = rat_int(c);
            for br in &self.branches {
                let img_lo = &br.slope * &br.lo + &br.intercept;
                let img_hi = &br.slope * &br.hi + &br.intercept;
                for (plo, phi) in a.parts() {
                    // Solve phi(u) + c = t + m*period with t in [plo, phi).
                    // For each integer m the target window on phi(u) is
                    // [plo - c + m p, phi - c + m p) intersected with the image.
                    let lo_shift = plo - &cc;
                    let hi_shift = phi - &cc;
                    let m_lo: num_bigint::BigInt = ((&img_lo - &hi_shift) / &p).floor().to_integer() + 1;
                    let m_hi = ((&img_hi - &lo_shift) / &p).ceil().to_integer();
                    let mut m = m_lo.clone();
                    while m <= m_hi {
                        let mp = BigRational::from_integer(m.clone()) * &p;
                        let t_lo = (&lo_shift + &mp).max(img_lo.clone());
                        let t_hi = (&hi_shift + &mp).min(img_hi.clone());
                        if t_lo < t_hi {
                            let u_lo = (&t_lo - &br.intercept) / &br.slope;
                            let u_hi = (&t_hi - &br.intercept) / &br.slope;
                            raw.push((&u_lo + &cc, &u_hi + &cc));
                        }
                        m += 1;
                    }
                }
            }
        }
        let out = IntervalSet::from_parts(raw);
        out.check_budget()?;
        Ok(out)
    }

    pub fn pull_n(&self, a: &IntervalSet, n: usize) -> Result<IntervalSet> {
        let mut cur = a.clone();
        for _ in 0..n {
            cur = self.pull_once(&cur)?;
        }
        Ok(cur)
    }

    /// `F o T_I^n` as weighted rational interval sets `(U_i, v_i)`, given
    /// the piecewise-constant profile of `F` on one period.
    pub fn pull_profile(&self, f: &PcProfile, n: usize) -> Result<Vec<(IntervalSet, f64)>> {
        if f.period != self.period {
            return Err(Error::Precondition(format!(
                "profile period {} does not match pullback period {}",
                f.period, self.period
            )));
        }
        let mut out = Vec::with_capacity(f.pieces.len());
        for (lo, hi, v) in &f.pieces {
            if *v == 0.0 {
                continue;
            }
            let set = self.pull_n(&IntervalSet::interval(lo.clone(), hi.clone()), n)?;
            out.push((set, *v));
        }
        Ok(out)
    }
}

/// Exact value of `int_0^p F(T_I^n u) G(u) du` for two piecewise-constant
/// profiles of the same period.
pub fn circle_correlation_exact(
    map: &PiecewiseMap,
    f: &PcProfile,
    g: &PcProfile,
    n: usize,
) -> Result<BigRational> {
    if f.period != g.period {
        return Err(Error::Precondition(
            "profiles must share a period for the exact circle correlation".into(),
        ));
    }
    let pull = CirclePullback::new(map, f.period)?;
    let pulled = pull.pull_profile(f, n)?;
    let g_pieces: Vec<(BigRational, BigRational, BigRational)> = g
        .pieces
        .iter()
        .filter(|(_, _, v)| *v != 0.0)
        .map(|(lo, hi, v)| (lo.clone(), hi.clone(), rat(*v)))
        .collect();
    let mut total = BigRational::zero();
    for (set, v) in pulled {
        total += rat(v) * set.weighted_overlap(&g_pieces);
    }
    Ok(total)
}

/// Exact value of `mu((F o T^n) g)` on the line, for a lift map, a periodic
/// piecewise-constant `F`, and a compactly supported piecewise-constant `g`
/// given as rational pieces. Uses `F o T^n (x) = F o T_I^n (x mod p)`.
pub fn line_correlation_exact(
    map: &PiecewiseMap,
    f: &PcProfile,
    g_pieces: &[(BigRational, BigRational, f64)],
    n: usize,
) -> Result<BigRational> {
    let pull = CirclePullback::new(map, f.period)?;
    let pulled = pull.pull_profile(f, n)?;
    let p = rat_int(f.period);
    let mut total = BigRational::zero();
    for (set, v) in pulled {
        let vr = rat(v);
        for (lo, hi, w) in g_pieces {
            if *w == 0.0 {
                continue;
            }
            let wr = rat(*w);
            // {x : x mod p in U} ∩ [lo, hi) = union over m of (U + m p) ∩ [lo, hi)
            let m_lo: num_bigint::BigInt = (lo / &p).floor().to_integer() - 1;
            let m_hi = (hi / &p).ceil().to_integer();
            let mut m = m_lo.clone();
            let piece = IntervalSet::interval(lo.clone(), hi.clone());
            while m <= m_hi {
                let shift = BigRational::from_integer(m.clone()) * &p;
                let translated = set.translate(&shift);
                total += &vr * &wr * translated.intersect(&piece).measure();
                m += 1;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat_to_f64;
    use crate::observables::{GlobalObservable, LocalObservable};

    fn rw() -> PiecewiseMap {
        PiecewiseMap::random_walk(-1, 2).unwrap()
    }

    #[test]
    fn pullback_preserves_circle_measure() {
        let pull = CirclePullback::new(&rw(), 1).unwrap();
        let a = IntervalSet::interval(rat(0.0), rat(0.5));
        let mut cur = a;
        for _ in 0..6 {
            cur = pull.pull_once(&cur).unwrap();
            assert_eq!(cur.measure(), rat(0.5));
        }
        assert_eq!(cur.len(), 3usize.pow(6)); // fragments grow like 3^n
    }

    #[test]
    fn one_step_pullback_of_half_interval() {
        // For 3u - 1 mod 1 (same circle map as 3u mod 1), the preimage of
        // [0, 1/2) is three intervals of length 1/6.
        let pull = CirclePullback::new(&rw(), 1).unwrap();
        let a = IntervalSet::interval(rat(0.0), rat(0.5));
        let pre = pull.pull_once(&a).unwrap();
        assert_eq!(pre.len(), 3);
        assert_eq!(pre.measure(), rat(0.5));
        // Overlap with [0, 1/2) itself has measure 1/3, so the one-step
        // correlation of the half indicator is 1/3 before normalization.
        let overlap = pre
            .intersect(&IntervalSet::interval(rat(0.0), rat(0.5)))
            .measure();
        assert_eq!(overlap, rat_int(1) / rat_int(3));
    }

    #[test]
    fn circle_correlation_approaches_product_of_means() {
        let map = rw();
        let f = GlobalObservable::half_cell(1).unwrap().pc_profile().unwrap();
        let vals: Vec<f64> = (0..=8)
            .map(|n| rat_to_f64(&circle_correlation_exact(&map, &f, &f, n).unwrap()))
            .collect();
        assert_eq!(vals[0], 0.5); // n = 0: int of the indicator against itself
        assert!((vals[1] - 1.0 / 3.0).abs() < 1e-15);
        // mixing of the quotient map drives the value to 1/4
        assert!((vals[8] - 0.25).abs() < 1e-3, "tail {}", vals[8]);
    }

    #[test]
    fn line_correlation_matches_circle_case() {
        // g = 2 * 1_[0, 1/2) has mass 1 in the base cell, so the line
        // correlation against the half-cell indicator is twice the circle
        // number.
        let map = rw();
        let f = GlobalObservable::half_cell(1).unwrap().pc_profile().unwrap();
        let g = LocalObservable::indicator(0.0, 0.5, true).unwrap();
        let pieces = g.pc_pieces().unwrap();
        for n in 0..=6 {
            let line = line_correlation_exact(&map, &f, &pieces, n).unwrap();
            let circle = circle_correlation_exact(&map, &f, &f, n).unwrap();
            assert_eq!(line, circle * rat(2.0), "n = {n}");
        }
    }
}
