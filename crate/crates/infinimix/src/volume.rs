//! Exhaustive families, window averages and the uniform infinite-volume
//! limit.
//!
//! A window average is `mu_V(F) = mu(V)^{-1} int_V F`. The infinite-volume
//! average of `F` is the limit of window averages, uniform over family
//! members of at least a given measure. The true supremum over all windows
//! is uncomputable; the report takes the supremum over the family's probe
//! grid at each ladder scale (with adversarial centers like `a = +-M`
//! available) and never claims more than grid-uniformity.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{rat, IntervalSet};
use crate::lattice::{LadderEntry, LatticeMeasure};
use crate::maps::PiecewiseMap;
use crate::observables::GlobalObservable;
use crate::quad::{self, DEFAULT_BUDGET};
use crate::quotient::circle_correlation_exact;
use crate::transfer::TransferEngine;

/// Default convergence tolerance for infinite-volume verdicts.
pub const DEFAULT_AVG_TOL: f64 = 5e-3;

/// A finite-measure window `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) && !(hi - lo).is_finite() {
            return Err(Error::Precondition(format!("bad window [{lo}, {hi})")));
        }
        if !(lo < hi) {
            return Err(Error::Precondition(format!("empty window [{lo}, {hi})")));
        }
        Ok(Window { lo, hi })
    }

    pub fn measure(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Probe centers; the scale-dependent variants chase sign-type failures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    At(f64),
    /// center = +M at ladder scale M
    PlusScale,
    /// center = -M at ladder scale M
    MinusScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// `V_M = [-M, M)`
    SymmetricIntervals,
    /// `V_{a,M} = [a - M, a + M)` over the probe grid
    TranslatedIntervals,
    /// integer-ended windows `[q - j, q + j)`
    CellAligned,
}

/// A parametrized family of ever larger windows, nested by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExhaustiveFamily {
    pub kind: FamilyKind,
    pub probes: Vec<Probe>,
    /// Increasing scale values M.
    pub ladder: Vec<f64>,
}

impl ExhaustiveFamily {
    pub fn symmetric(ladder: Vec<f64>) -> Self {
        ExhaustiveFamily {
            kind: FamilyKind::SymmetricIntervals,
            probes: vec![Probe::At(0.0)],
            ladder,
        }
    }

    pub fn translated(probes: Vec<Probe>, ladder: Vec<f64>) -> Self {
        ExhaustiveFamily {
            kind: FamilyKind::TranslatedIntervals,
            probes,
            ladder,
        }
    }

    pub fn cell_aligned(centers: Vec<i64>, ladder: Vec<f64>) -> Self {
        ExhaustiveFamily {
            kind: FamilyKind::CellAligned,
            probes: centers.into_iter().map(|q| Probe::At(q as f64)).collect(),
            ladder: ladder.into_iter().map(|m| m.round()).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ladder.is_empty() {
            return Err(Error::LadderTooShort { need: 1, got: 0 });
        }
        if self.ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition("ladder scales must be increasing".into()));
        }
        if self.probes.is_empty() {
            return Err(Error::Precondition("probe grid must be nonempty".into()));
        }
        Ok(())
    }

    /// The family members at scale `m`, sorted by center.
    pub fn windows_at(&self, m: f64) -> Result<Vec<Window>> {
        let mut centers: Vec<f64> = match self.kind {
            FamilyKind::SymmetricIntervals => vec![0.0],
            _ => self
                .probes
                .iter()
                .map(|p| match p {
                    Probe::At(a) => *a,
                    Probe::PlusScale => m,
                    Probe::MinusScale => -m,
                })
                .collect(),
        };
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        centers.dedup();
        let m = if self.kind == FamilyKind::CellAligned { m.round() } else { m };
        centers.into_iter().map(|a| Window::new(a - m, a + m)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IvVerdict {
    Converged,
    NotUniform,
    Inconclusive,
}

/// Report of an infinite-volume limit estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IvLimitReport {
    pub estimate: f64,
    pub tol: f64,
    pub ladder: Vec<LadderPoint>,
    pub verdict: IvVerdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LadderPoint {
    pub m: f64,
    pub defect: f64,
}

/// `mu_V(F)` by adaptive quadrature to `1e-9 * mu(V)` absolute tolerance.
pub fn window_average(f: &GlobalObservable, v: &Window) -> Result<f64> {
    let hints = f.quadrature_hints(v.lo, v.hi);
    let r = quad::integrate(
        |x| Ok(f.eval(x)),
        v.lo,
        v.hi,
        1e-9 * v.measure(),
        DEFAULT_BUDGET,
        &hints,
    )?;
    Ok(r.value / v.measure())
}

/// Estimate of the uniform infinite-volume average over the family.
///
/// The estimate is the family mean at the top scale. The defect at scale M
/// is the supremum of `|mu_V(F) - estimate|` over all family members with
/// measure at least M (a suffix supremum over the ladder, so the series is
/// nonincreasing by construction). `Converged` needs the top-scale defect
/// within tolerance; `NotUniform` needs a defect at least ten times the
/// tolerance persisting across the last three scales; anything else is
/// `Inconclusive`, which is a verdict, not an error.
pub fn estimate_avg(f: &GlobalObservable, fam: &ExhaustiveFamily, tol: f64) -> Result<IvLimitReport> {
    estimate_avg_with(&mut |w| window_average(f, w), fam, tol)
}

pub(crate) fn estimate_avg_with(
    eval: &mut dyn FnMut(&Window) -> Result<f64>,
    fam: &ExhaustiveFamily,
    tol: f64,
) -> Result<IvLimitReport> {
    fam.validate()?;
    if fam.ladder.len() < 4 {
        return Err(Error::LadderTooShort {
            need: 4,
            got: fam.ladder.len(),
        });
    }
    let mut scale_means: Vec<Vec<f64>> = Vec::with_capacity(fam.ladder.len());
    for &m in &fam.ladder {
        let mut means = Vec::new();
        for w in fam.windows_at(m)? {
            means.push(eval(&w)?);
        }
        scale_means.push(means);
    }
    let top = scale_means.last().unwrap();
    let estimate = top.iter().sum::<f64>() / top.len() as f64;
    let per_scale: Vec<f64> = scale_means
        .iter()
        .map(|means| {
            means
                .iter()
                .map(|v| (v - estimate).abs())
                .fold(0.0f64, f64::max)
        })
        .collect();
    // Suffix supremum: deviation over members with measure >= M.
    let mut defects = per_scale.clone();
    for i in (0..defects.len().saturating_sub(1)).rev() {
        defects[i] = defects[i].max(defects[i + 1]);
    }
    let k = defects.len() - 1;
    let last3 = &defects[k - 2..=k];
    let verdict = if defects[k] <= tol && last3.windows(2).all(|w| w[0] >= w[1]) {
        IvVerdict::Converged
    } else if last3.iter().all(|d| *d >= 10.0 * tol) {
        IvVerdict::NotUniform
    } else {
        IvVerdict::Inconclusive
    };
    Ok(IvLimitReport {
        estimate,
        tol,
        ladder: fam
            .ladder
            .iter()
            .zip(defects)
            .map(|(&m, defect)| LadderPoint { m, defect })
            .collect(),
        verdict,
    })
}

/// `mu_V(F o T^n)` with structure-aware fast paths:
/// integer-ended windows of a lift map with a period-1 piecewise-constant
/// profile reduce to one exact circle computation; cell-step observables on
/// random-walk maps reduce to a jump-law convolution; everything else runs
/// adaptive quadrature on the orbit composition.
pub fn window_average_composed(
    map: &PiecewiseMap,
    f: &GlobalObservable,
    n: usize,
    v: &Window,
) -> Result<f64> {
    if n == 0 {
        return window_average(f, v);
    }
    let integer_ends = v.lo.fract() == 0.0 && v.hi.fract() == 0.0;
    if map.is_translation_invariant() && integer_ends {
        if let Some(prof) = f.pc_profile() {
            if prof.period == 1 && map.affine_cell_branches().is_some() {
                let one = GlobalObservable::one().pc_profile().unwrap();
                let val = circle_correlation_exact(map, &prof, &one, n)?;
                return Ok(val.to_f64().unwrap());
            }
        }
        if let (Some(step), Some(_)) = (f.exact_step(), map.jump_law()) {
            let engine = TransferEngine::exact_lattice(std::sync::Arc::new(map.clone()))?;
            let mut ladder = engine.ladder(LatticeMeasure::single_cell(0))?;
            let entry = ladder.entry(n).clone();
            let (w0, w1) = (v.lo as i64, v.hi as i64);
            let mut total = 0.0;
            match &entry {
                LadderEntry::Exact(m) => {
                    for (d, mass) in m.cells() {
                        let p = mass.to_f64().unwrap();
                        let mut s = 0.0;
                        for c in w0..w1 {
                            s += step.cell(c + d);
                        }
                        total += p * s;
                    }
                }
                LadderEntry::Float(fl) => {
                    for (i, &p) in fl.masses.iter().enumerate() {
                        let d = fl.offset + i as i64;
                        let mut s = 0.0;
                        for c in w0..w1 {
                            s += step.cell(c + d);
                        }
                        total += p * s;
                    }
                }
            }
            return Ok(total / v.measure());
        }
    }
    // Orbit-composition quadrature; split panels on unit cells.
    let mut hints = Vec::new();
    let mut j = v.lo.floor() + 1.0;
    while j < v.hi {
        if j > v.lo {
            hints.push(j);
        }
        j += 1.0;
    }
    let r = quad::integrate(
        |x| Ok(f.eval(map.iterate(x, n)?)),
        v.lo,
        v.hi,
        1e-9 * v.measure(),
        DEFAULT_BUDGET,
        &hints,
    )?;
    Ok(r.value / v.measure())
}

/// Deviations `|Avg-estimate(F o T^n) - Avg-estimate(F)|` per requested n.
/// The infinite-volume average is T-invariant, so under measure
/// preservation these should vanish up to estimator noise. Requires the
/// base estimate to have converged.
pub fn avg_invariance_check(
    map: &PiecewiseMap,
    f: &GlobalObservable,
    fam: &ExhaustiveFamily,
    n_list: &[usize],
    tol: f64,
) -> Result<Vec<f64>> {
    let base = estimate_avg(f, fam, tol)?;
    if base.verdict != IvVerdict::Converged {
        return Err(Error::Precondition(format!(
            "avg invariance check needs a converged base estimate, got {:?}",
            base.verdict
        )));
    }
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let rep = estimate_avg_with(
            &mut |w| window_average_composed(map, f, n, w),
            fam,
            tol,
        )?;
        out.push((rep.estimate - base.estimate).abs());
    }
    Ok(out)
}

/// Exact pullback of a rational interval set through `n` steps of the map.
pub fn pull_back_set(map: &PiecewiseMap, set: &IntervalSet, steps: usize) -> Result<IntervalSet> {
    let mut cur = set.clone();
    for _ in 0..steps {
        let mut raw = Vec::new();
        for (lo, hi) in cur.parts() {
            raw.extend(map.pull_back_interval(lo, hi)?);
        }
        cur = IntervalSet::from_parts(raw);
        cur.check_budget()?;
    }
    Ok(cur)
}

/// Volume-compatibility series: `ratio(M) = mu(T^{-n} V symmdiff V) / mu(V)`
/// over the family ladder, computed by exact interval arithmetic on the
/// pulled-back endpoints (these ratios are small differences of large
/// measures, so sampling noise would swamp them). Every ratio lies in
/// `[0, 2]`; a dynamically compatible family sends it to zero.
pub fn avol_check(
    map: &PiecewiseMap,
    fam: &ExhaustiveFamily,
    n: usize,
) -> Result<Vec<(f64, f64)>> {
    fam.validate()?;
    let mut out = Vec::with_capacity(fam.ladder.len());
    for &m in &fam.ladder {
        let mut worst = 0.0f64;
        for w in fam.windows_at(m)? {
            if n == 0 {
                continue; // identity: the symmetric difference is empty
            }
            let v = IntervalSet::interval(rat(w.lo), rat(w.hi));
            let pulled = pull_back_set(map, &v, n)?;
            let sym = v.symmetric_difference_measure(&pulled);
            let ratio = (sym / v.measure()).to_f64().unwrap();
            worst = worst.max(ratio);
        }
        out.push((m, worst));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat_int;

    #[test]
    fn window_average_examples() {
        let sign = GlobalObservable::sign();
        let w = Window::new(-2.0, 2.0).unwrap();
        assert!(window_average(&sign, &w).unwrap().abs() < 1e-12);
        let w = Window::new(0.0, 4.0).unwrap();
        assert!((window_average(&sign, &w).unwrap() - 1.0).abs() < 1e-12);
        let one = GlobalObservable::one();
        assert!((window_average(&one, &w).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_converges_with_zero_defect() {
        let fam = ExhaustiveFamily::symmetric(vec![10.0, 100.0, 1000.0, 10_000.0]);
        let rep = estimate_avg(&GlobalObservable::one(), &fam, DEFAULT_AVG_TOL).unwrap();
        assert_eq!(rep.verdict, IvVerdict::Converged);
        assert_eq!(rep.estimate, 1.0);
        assert!(rep.ladder.iter().all(|p| p.defect < 1e-12));
    }

    #[test]
    fn cosine_converges_to_zero_on_integer_ladder() {
        let fam = ExhaustiveFamily::symmetric(vec![10.0, 100.0, 1000.0, 10_000.0]);
        let rep = estimate_avg(&GlobalObservable::cosine(1).unwrap(), &fam, DEFAULT_AVG_TOL).unwrap();
        assert_eq!(rep.verdict, IvVerdict::Converged);
        assert!(rep.estimate.abs() < 1e-6);
    }

    #[test]
    fn sign_is_not_uniform_under_translated_probes() {
        let fam = ExhaustiveFamily::translated(
            vec![Probe::At(0.0), Probe::PlusScale, Probe::MinusScale],
            vec![10.0, 100.0, 1000.0, 10_000.0],
        );
        let rep = estimate_avg(&GlobalObservable::sign(), &fam, DEFAULT_AVG_TOL).unwrap();
        assert_eq!(rep.verdict, IvVerdict::NotUniform);
        for p in &rep.ladder {
            assert!(p.defect >= 0.9, "defect {} at M={}", p.defect, p.m);
        }
    }

    #[test]
    fn sign_on_symmetric_windows_has_quadrature_defect_only() {
        let fam = ExhaustiveFamily::symmetric(vec![5.0, 50.0, 500.0, 5000.0]);
        let rep = estimate_avg(&GlobalObservable::sign(), &fam, DEFAULT_AVG_TOL).unwrap();
        assert!(rep.estimate.abs() < 1e-9);
        assert!(rep.ladder.iter().all(|p| p.defect < 1e-8));
    }

    #[test]
    fn ladder_must_have_four_scales() {
        let fam = ExhaustiveFamily::symmetric(vec![10.0, 100.0, 1000.0]);
        assert!(matches!(
            estimate_avg(&GlobalObservable::one(), &fam, 1e-3),
            Err(Error::LadderTooShort { .. })
        ));
    }

    #[test]
    fn avol_identity_is_zero_exactly() {
        let fam = ExhaustiveFamily::symmetric(vec![10.0, 100.0, 1000.0, 10_000.0]);
        let map = PiecewiseMap::random_walk(-1, 2).unwrap();
        let series = avol_check(&map, &fam, 0).unwrap();
        assert!(series.iter().all(|(_, r)| *r == 0.0));
    }

    #[test]
    fn avol_random_walk_boundary_collar() {
        // For rw:-1:2 and V = [-M, M), one step mismatches 1/3 + 1/3 inside
        // each edge cell and 1/3 + 1/3 outside: ratio = (4/3) / (2M).
        let fam = ExhaustiveFamily::symmetric(vec![10.0, 100.0, 1000.0]);
        let map = PiecewiseMap::random_walk(-1, 2).unwrap();
        let series = avol_check(&map, &fam, 1).unwrap();
        for (m, ratio) in &series {
            let expect = 2.0 / (3.0 * m);
            assert!((ratio - expect).abs() < 1e-12, "M={m}: {ratio} vs {expect}");
            assert!(*ratio <= 10.0 / m);
        }
        assert!(series.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn avol_boole_ratio_decreases() {
        let fam = ExhaustiveFamily::symmetric(vec![10.0, 100.0, 1000.0]);
        let map = PiecewiseMap::boole();
        let series = avol_check(&map, &fam, 1).unwrap();
        assert!(series.windows(2).all(|w| w[1].1 < w[0].1), "{series:?}");
        assert!(series.last().unwrap().1 < 1e-2);
        // Pullback preserves measure: T^{-1}V has the measure of V.
        let v = IntervalSet::interval(rat_int(-10), rat_int(10));
        let pulled = pull_back_set(&map, &v, 1).unwrap();
        let diff = (pulled.measure() - v.measure()).to_f64().unwrap();
        assert!(diff.abs() < 1e-9);
    }

    #[test]
    fn avg_invariance_for_half_cell_on_random_walk() {
        let map = PiecewiseMap::random_walk(-1, 2).unwrap();
        let f = GlobalObservable::half_cell(1).unwrap();
        let fam = ExhaustiveFamily::cell_aligned(vec![0, 3, -5], vec![4.0, 8.0, 16.0, 32.0]);
        let devs = avg_invariance_check(&map, &f, &fam, &[1, 2, 5], DEFAULT_AVG_TOL).unwrap();
        for d in devs {
            assert!(d < 1e-9, "deviation {d}");
        }
    }

    #[test]
    fn avg_invariance_step_observable_path() {
        use crate::observables::StepFn;
        let map = PiecewiseMap::random_walk(-1, 2).unwrap();
        let f = GlobalObservable::lattice_step(
            StepFn {
                offset: 0,
                values: vec![1.0, 0.0],
                left_tail: 0.5,
                right_tail: 0.5,
            },
            "t".into(),
        );
        let fam = ExhaustiveFamily::cell_aligned(vec![0], vec![8.0, 16.0, 32.0, 64.0]);
        let devs = avg_invariance_check(&map, &f, &fam, &[1, 3], DEFAULT_AVG_TOL).unwrap();
        // the step deviates from its tail on two cells; window means move by
        // at most (mass leaking across the edge) / (2M)
        for d in devs {
            assert!(d < 2e-2, "deviation {d}");
        }
    }
}
