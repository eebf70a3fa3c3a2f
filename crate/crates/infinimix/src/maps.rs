//! Piecewise expanding maps of the real line that preserve Lebesgue measure.
//!
//! Two families are built in:
//!
//! * the Boole transformation `T(x) = x - 1/x`, with two full branches and
//!   preimages given by the roots of `x^2 - yx - 1 = 0`;
//! * translation-invariant lifts `T(x) = phi(x - j) + j` on each cell
//!   `[j, j+1)`, where `phi` maps the unit cell onto `[k1, k2)`. When `phi`
//!   is affine with integer endpoints the induced cell process is a lattice
//!   random walk with a rational jump law.
//!
//! Branch inverses and derivatives are supplied in closed form; there is no
//! root-finding anywhere in the evaluation path. Unit cells are half-open
//! `[j, j+1)` throughout.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::rat;
use crate::lattice::JumpLaw;

/// Distance below which a point is treated as sitting on a pole.
const POLE_GUARD: f64 = 1e-300;

/// Closed-form formula templates. These are the only function shapes the
/// crate evaluates, which keeps branch inverses exact and serializable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "snake_case")]
pub enum Formula {
    /// `x -> slope * x + intercept`
    Affine { slope: f64, intercept: f64 },
    /// `x -> x - 1/x` (NaN within the pole guard around 0)
    Boole,
    /// Positive root of `x^2 - yx - 1 = 0`
    BooleInverseUpper,
    /// Negative root of `x^2 - yx - 1 = 0`
    BooleInverseLower,
    /// `x -> 1 + 1/x^2`
    BooleDerivative,
    /// `x -> value`
    Constant { value: f64 },
}

impl Formula {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Formula::Affine { slope, intercept } => slope * x + intercept,
            Formula::Boole => {
                if x.abs() < POLE_GUARD {
                    f64::NAN
                } else {
                    x - 1.0 / x
                }
            }
            Formula::BooleInverseUpper => {
                let s = (x * x + 4.0).sqrt();
                if x >= 0.0 {
                    0.5 * (x + s)
                } else {
                    // Avoid cancellation: r+ = -1 / r-.
                    -2.0 / (x - s)
                }
            }
            Formula::BooleInverseLower => {
                let s = (x * x + 4.0).sqrt();
                if x <= 0.0 {
                    0.5 * (x - s)
                } else {
                    -2.0 / (x + s)
                }
            }
            Formula::BooleDerivative => 1.0 + 1.0 / (x * x),
            Formula::Constant { value } => value,
        }
    }
}

/// One monotone increasing expanding branch on a half-open domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    /// Domain `[lo, hi)`; infinite endpoints allowed.
    pub lo: f64,
    pub hi: f64,
    pub forward: Formula,
    pub inverse: Formula,
    pub derivative: Formula,
    /// Image `[img_lo, img_hi)`, computed at construction.
    img_lo: f64,
    img_hi: f64,
}

impl Branch {
    pub fn new(lo: f64, hi: f64, forward: Formula, inverse: Formula, derivative: Formula) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Construction(format!("empty branch domain [{lo}, {hi})")));
        }
        let (img_lo, img_hi) = match forward {
            Formula::Affine { slope, intercept } => {
                if !(lo.is_finite() && hi.is_finite()) {
                    return Err(Error::Construction(
                        "affine branches need finite domains".into(),
                    ));
                }
                if slope <= 1.0 {
                    return Err(Error::Construction(format!(
                        "branch must be increasing and expanding, got slope {slope}"
                    )));
                }
                (slope * lo + intercept, slope * hi + intercept)
            }
            Formula::Boole => {
                // Each Boole branch covers a full half-line ending at the
                // pole and maps onto all of R.
                if !(lo == f64::NEG_INFINITY && hi == 0.0 || lo == 0.0 && hi == f64::INFINITY) {
                    return Err(Error::Construction(
                        "Boole branches must be (-inf, 0) or (0, +inf)".into(),
                    ));
                }
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            _ => {
                return Err(Error::Construction(format!(
                    "{forward:?} is not usable as a forward formula"
                )))
            }
        };
        let branch = Branch {
            lo,
            hi,
            forward,
            inverse,
            derivative,
            img_lo,
            img_hi,
        };
        branch.validate()?;
        Ok(branch)
    }

    /// Sample-based inverse/derivative consistency check.
    fn validate(&self) -> Result<()> {
        let (a, b) = self.sample_range();
        for i in 0..32 {
            let y = a + (b - a) * (i as f64 + 0.5) / 32.0;
            let x = self.inverse.eval(y);
            let back = self.forward.eval(x);
            if !(back.is_finite() && (back - y).abs() <= 1e-9 * y.abs().max(1.0)) {
                return Err(Error::Construction(format!(
                    "inverse mismatch: forward(inverse({y})) = {back}"
                )));
            }
            let d = self.derivative.eval(x).abs();
            if !(d > 1.0) {
                return Err(Error::Construction(format!(
                    "derivative magnitude {d} <= 1 at x = {x}"
                )));
            }
        }
        Ok(())
    }

    fn sample_range(&self) -> (f64, f64) {
        let lo = if self.img_lo.is_finite() { self.img_lo } else { -20.0 };
        let hi = if self.img_hi.is_finite() { self.img_hi } else { 20.0 };
        (lo, hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }

    pub fn image(&self) -> (f64, f64) {
        (self.img_lo, self.img_hi)
    }

    pub fn image_contains(&self, y: f64) -> bool {
        self.img_lo <= y && y < self.img_hi
    }
}

/// The kind tag carried by a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapKind {
    Boole,
    TranslationInvariant,
    Custom,
}

#[derive(Debug, Clone)]
enum MapRepr {
    /// Branches tile the whole line (up to a countable set).
    Explicit(Vec<Branch>),
    /// Cell branches tile `[0, 1)`; the map is the translation lift.
    Lift { cell: Vec<Branch> },
}

/// Outcome of the numerical Lebesgue-preservation check run on custom maps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreservationReport {
    pub max_deviation: f64,
    pub points_checked: usize,
}

/// A measure-preserving piecewise map of the real line.
#[derive(Debug, Clone)]
pub struct PiecewiseMap {
    id: String,
    kind: MapKind,
    repr: MapRepr,
    jump_law: Option<JumpLaw>,
    preservation: Option<PreservationReport>,
}

impl PiecewiseMap {
    /// The Boole transformation `T(x) = x - 1/x`.
    pub fn boole() -> Self {
        let neg = Branch::new(
            f64::NEG_INFINITY,
            0.0,
            Formula::Boole,
            Formula::BooleInverseLower,
            Formula::BooleDerivative,
        )
        .expect("static branch");
        let pos = Branch::new(
            0.0,
            f64::INFINITY,
            Formula::Boole,
            Formula::BooleInverseUpper,
            Formula::BooleDerivative,
        )
        .expect("static branch");
        PiecewiseMap {
            id: "boole".into(),
            kind: MapKind::Boole,
            repr: MapRepr::Explicit(vec![neg, pos]),
            jump_law: None,
            preservation: None,
        }
    }

    /// Random-walk map: the lift of `phi(u) = k1 + (k2 - k1) u`, whose cell
    /// sequence jumps uniformly over `{k1, ..., k2 - 1}`.
    pub fn random_walk(k1: i64, k2: i64) -> Result<Self> {
        let law = JumpLaw::uniform(k1, k2)?;
        let k = (k2 - k1) as f64;
        let cell = vec![Branch::new(
            0.0,
            1.0,
            Formula::Affine {
                slope: k,
                intercept: k1 as f64,
            },
            Formula::Affine {
                slope: 1.0 / k,
                intercept: -(k1 as f64) / k,
            },
            Formula::Constant { value: k },
        )?];
        Ok(PiecewiseMap {
            id: format!("rw:{k1}:{k2}"),
            kind: MapKind::TranslationInvariant,
            repr: MapRepr::Lift { cell },
            jump_law: Some(law),
            preservation: None,
        })
    }

    /// User-supplied map. Lift specs give branches of `phi` on `[0, 1)`;
    /// explicit specs give branches tiling the line. The construction runs
    /// the Lebesgue-preservation check and rejects maps whose preimage
    /// weight sums stray from 1.
    pub fn custom(id: &str, spec: &MapSpec) -> Result<Self> {
        let mut branches = Vec::with_capacity(spec.branches.len());
        for b in &spec.branches {
            branches.push(Branch::new(
                b.domain[0],
                b.domain[1],
                b.forward,
                b.inverse,
                b.derivative,
            )?);
        }
        branches.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
        let repr = match spec.kind {
            MapSpecKind::Lift => {
                check_tiling(&branches, 0.0, 1.0)?;
                MapRepr::Lift { cell: branches }
            }
            MapSpecKind::Explicit => {
                check_tiling(&branches, f64::NEG_INFINITY, f64::INFINITY)?;
                MapRepr::Explicit(branches)
            }
        };
        let jump_law = match &repr {
            MapRepr::Lift { cell } => detect_jump_law(cell),
            MapRepr::Explicit(_) => None,
        };
        let mut map = PiecewiseMap {
            id: id.to_string(),
            kind: MapKind::Custom,
            repr,
            jump_law,
            preservation: None,
        };
        map.preservation = Some(map.preservation_check()?);
        Ok(map)
    }

    /// Resolve a catalog id: `boole`, `rw:<k1>:<k2>`, `custom:<file.json>`.
    pub fn from_id(id: &str) -> Result<Self> {
        let parts: Vec<&str> = id.split(':').collect();
        match parts.as_slice() {
            ["boole"] => Ok(PiecewiseMap::boole()),
            ["rw", k1, k2] => {
                let k1: i64 = k1
                    .parse()
                    .map_err(|_| unknown_map_id(id))?;
                let k2: i64 = k2
                    .parse()
                    .map_err(|_| unknown_map_id(id))?;
                PiecewiseMap::random_walk(k1, k2)
            }
            ["custom", path] => {
                let text = std::fs::read_to_string(path)?;
                let spec: MapSpec = serde_json::from_str(&text)
                    .map_err(|e| Error::Construction(format!("bad map spec {path}: {e}")))?;
                PiecewiseMap::custom(id, &spec)
            }
            _ => Err(unknown_map_id(id)),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn is_translation_invariant(&self) -> bool {
        matches!(self.repr, MapRepr::Lift { .. })
    }

    pub fn jump_law(&self) -> Option<&JumpLaw> {
        self.jump_law.as_ref()
    }

    pub fn preservation_report(&self) -> Option<&PreservationReport> {
        self.preservation.as_ref()
    }

    pub fn branch_count(&self) -> usize {
        match &self.repr {
            MapRepr::Explicit(b) => b.len(),
            MapRepr::Lift { cell } => cell.len(),
        }
    }

    /// One application of the map.
    pub fn apply(&self, x: f64) -> Result<f64> {
        self.iterate(x, 1)
    }

    /// `T^n(x)`. For lifts the orbit is carried as an exact integer cell
    /// plus a fractional part, so translation equivariance survives long
    /// orbits instead of being lost to rounding in `cell + frac` sums.
    pub fn iterate(&self, x: f64, n: usize) -> Result<f64> {
        if n == 0 {
            return Ok(x);
        }
        if !x.is_finite() {
            return Err(Error::SingularOrbit { x, step: 0 });
        }
        match &self.repr {
            MapRepr::Lift { cell } => {
                let (mut j, mut u) = split_cell(x);
                for step in 0..n {
                    let (dj, u2) = lift_step(cell, u)
                        .ok_or(Error::SingularOrbit { x: j as f64 + u, step })?;
                    j += dj;
                    u = u2;
                }
                Ok(j as f64 + u)
            }
            MapRepr::Explicit(branches) => {
                let mut cur = x;
                for step in 0..n {
                    let b = branches
                        .iter()
                        .find(|b| b.contains(cur))
                        .ok_or(Error::SingularOrbit { x: cur, step })?;
                    let next = b.forward.eval(cur);
                    if !next.is_finite() {
                        return Err(Error::SingularOrbit { x: cur, step });
                    }
                    cur = next;
                }
                Ok(cur)
            }
        }
    }

    /// All preimages of `y`, each with its Perron-Frobenius weight
    /// `1 / |T'(x)|`. The weights sum to 1 for a Lebesgue-preserving map.
    pub fn preimages(&self, y: f64) -> Result<Vec<(f64, f64)>> {
        match &self.repr {
            MapRepr::Explicit(branches) => {
                let mut out = Vec::with_capacity(branches.len());
                for b in branches {
                    let (ilo, ihi) = b.image();
                    if (ilo.is_finite() && y == ilo) || (ihi.is_finite() && y == ihi) {
                        return Err(Error::BoundaryPoint(y));
                    }
                    if b.image_contains(y) {
                        let x = b.inverse.eval(y);
                        out.push((x, 1.0 / b.derivative.eval(x).abs()));
                    }
                }
                Ok(out)
            }
            MapRepr::Lift { cell } => {
                let mut out = Vec::new();
                for b in cell {
                    let (ilo, ihi) = b.image();
                    // y - j in [ilo, ihi)  <=>  y - ihi < j <= y - ilo
                    let j_hi = (y - ilo).floor() as i64;
                    let j_lo = (y - ihi).floor() as i64 + 1;
                    for j in j_lo..=j_hi {
                        let target = y - j as f64;
                        if !(ilo <= target && target < ihi) {
                            continue; // float edge of the integer range
                        }
                        let u = b.inverse.eval(target);
                        out.push((j as f64 + u, 1.0 / b.derivative.eval(u).abs()));
                    }
                }
                out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                Ok(out)
            }
        }
    }

    /// Conservative interval containing every preimage of `y` up to `depth`
    /// steps back. Used to prune preimage trees against a compact support.
    pub fn preimage_reach(&self, y: f64, depth: usize) -> (f64, f64) {
        let d = depth as f64;
        match &self.repr {
            MapRepr::Lift { cell } => {
                let mut img_lo = f64::INFINITY;
                let mut img_hi = f64::NEG_INFINITY;
                for b in cell {
                    img_lo = img_lo.min(b.image().0);
                    img_hi = img_hi.max(b.image().1);
                }
                (y - d * img_hi, y - d * img_lo + d)
            }
            MapRepr::Explicit(_) => {
                if self.kind == MapKind::Boole {
                    // Preimages of y lie within [min(y,0)-1, max(y,0)+1].
                    (y.min(0.0) - d, y.max(0.0) + d)
                } else {
                    (f64::NEG_INFINITY, f64::INFINITY)
                }
            }
        }
    }

    /// Finite branch-domain boundaries of `T` inside `[lo, hi)`: the points
    /// where `T` fails to be smooth. For lifts these are the integers plus
    /// any interior cell breakpoints.
    pub fn branch_boundaries_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match &self.repr {
            MapRepr::Explicit(branches) => {
                for b in branches {
                    for e in [b.lo, b.hi] {
                        if e.is_finite() && e > lo && e < hi {
                            out.push(e);
                        }
                    }
                }
            }
            MapRepr::Lift { cell } => {
                let interior: Vec<f64> = cell.iter().skip(1).map(|b| b.lo).collect();
                let mut j = lo.floor() as i64;
                while (j as f64) < hi {
                    let jf = j as f64;
                    if jf > lo {
                        out.push(jf);
                    }
                    for &c in &interior {
                        let p = jf + c;
                        if p > lo && p < hi {
                            out.push(p);
                        }
                    }
                    j += 1;
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    /// The finite branch-boundary set of an explicit map. Lifts have a
    /// boundary on every integer and return `None`.
    pub fn explicit_branch_boundaries(&self) -> Option<Vec<f64>> {
        match &self.repr {
            MapRepr::Explicit(branches) => {
                let mut out = Vec::new();
                for b in branches {
                    for e in [b.lo, b.hi] {
                        if e.is_finite() {
                            out.push(e);
                        }
                    }
                }
                out.sort_by(|a, b| a.partial_cmp(b).unwrap());
                out.dedup();
                Some(out)
            }
            MapRepr::Lift { .. } => None,
        }
    }

    /// Quotient map `T mod period` on `[0, period)`. Requires translation
    /// invariance.
    pub fn quotient(&self, period: i64) -> Result<QuotientMap> {
        if !self.is_translation_invariant() {
            return Err(Error::Precondition(
                "quotient maps need a translation-invariant base".into(),
            ));
        }
        if period < 1 {
            return Err(Error::Precondition(format!("period must be >= 1, got {period}")));
        }
        Ok(QuotientMap {
            period,
            base: self.clone(),
        })
    }

    /// Affine cell branches with exact rational data, if the map is a lift
    /// of a piecewise-affine `phi`. Feeds the exact pullback machinery.
    pub fn affine_cell_branches(&self) -> Option<Vec<AffineCellBranch>> {
        let cell = match &self.repr {
            MapRepr::Lift { cell } => cell,
            _ => return None,
        };
        let mut out = Vec::with_capacity(cell.len());
        for b in cell {
            match b.forward {
                Formula::Affine { slope, intercept } => out.push(AffineCellBranch {
                    lo: rat(b.lo),
                    hi: rat(b.hi),
                    slope: rat(slope),
                    intercept: rat(intercept),
                }),
                _ => return None,
            }
        }
        Some(out)
    }

    /// Exact pullback of a half-open interval `[a, b)` through one step of
    /// the map, as rational endpoints. For Boole the branch inverses are
    /// evaluated in floats and lifted exactly afterwards.
    pub fn pull_back_interval(&self, a: &BigRational, b: &BigRational) -> Result<Vec<(BigRational, BigRational)>> {
        use crate::interval::rat_to_f64;
        if a >= b {
            return Ok(Vec::new());
        }
        match &self.repr {
            MapRepr::Lift { .. } => {
                let branches = self.affine_cell_branches().ok_or_else(|| {
                    Error::Precondition("exact pullback needs affine cell branches".into())
                })?;
                let mut out = Vec::new();
                for br in &branches {
                    let img_lo = &br.slope * &br.lo + &br.intercept;
                    let img_hi = &br.slope * &br.hi + &br.intercept;
                    // [a - j, b - j) must meet [img_lo, img_hi).
                    use num_traits::ToPrimitive;
                    let j_lo = (a - &img_hi)
                        .floor()
                        .to_integer()
                        .to_i64()
                        .ok_or_else(|| Error::Precondition("pullback window too large".into()))?
                        + 1;
                    let j_hi = (b - &img_lo)
                        .ceil()
                        .to_integer()
                        .to_i64()
                        .ok_or_else(|| Error::Precondition("pullback window too large".into()))?;
                    for j in j_lo..=j_hi {
                        let jr = BigRational::from_integer(j.into());
                        let lo_t = (a - &jr).max(img_lo.clone());
                        let hi_t = (b - &jr).min(img_hi.clone());
                        if lo_t < hi_t {
                            let u_lo = (&lo_t - &br.intercept) / &br.slope;
                            let u_hi = (&hi_t - &br.intercept) / &br.slope;
                            out.push((&u_lo + &jr, &u_hi + &jr));
                        }
                    }
                }
                Ok(out)
            }
            MapRepr::Explicit(branches) => {
                let mut out = Vec::new();
                let af = rat_to_f64(a);
                let bf = rat_to_f64(b);
                for br in branches {
                    let (ilo, ihi) = br.image();
                    let lo_t = af.max(ilo);
                    let hi_t = bf.min(ihi);
                    if lo_t < hi_t {
                        let u_lo = br.inverse.eval(lo_t);
                        let u_hi = br.inverse.eval(hi_t);
                        out.push((rat(u_lo), rat(u_hi)));
                    }
                }
                Ok(out)
            }
        }
    }

    /// Lebesgue-preservation check: preimage weights must sum to 1 on a
    /// grid of 1000 points per unit cell over [-10, 10] plus 100 points in
    /// the tails.
    pub fn preservation_check(&self) -> Result<PreservationReport> {
        let mut max_dev: f64 = 0.0;
        let mut worst_y = 0.0;
        let mut points = 0usize;
        let check = |map: &PiecewiseMap, y: f64| -> Result<(f64, f64)> {
            let pre = map.preimages(y)?;
            let sum: f64 = pre.iter().map(|(_, w)| w).sum();
            Ok((y, (sum - 1.0).abs()))
        };
        let mut ys: Vec<f64> = Vec::with_capacity(20_100);
        for c in -10..10 {
            for i in 0..1000 {
                ys.push(c as f64 + (i as f64 + 0.5) / 1000.0);
            }
        }
        for i in 0..50 {
            let t = 10.0 * (1000.0f64).powf(i as f64 / 49.0).min(1000.0);
            ys.push(t + 0.25);
            ys.push(-t - 0.25);
        }
        for y in ys {
            let (y, dev) = check(self, y)?;
            points += 1;
            if dev > max_dev {
                max_dev = dev;
                worst_y = y;
            }
        }
        if max_dev > 1e-6 {
            return Err(Error::Construction(format!(
                "preimage weights sum to 1 {max_dev:.3e} off at y = {worst_y}; \
                 the branch data does not preserve Lebesgue measure"
            )));
        }
        Ok(PreservationReport {
            max_deviation: max_dev,
            points_checked: points,
        })
    }
}

fn unknown_map_id(id: &str) -> Error {
    Error::UnknownId {
        id: id.to_string(),
        candidates: vec!["boole".into(), "rw:<k1>:<k2>".into(), "custom:<file.json>".into()],
    }
}

/// Exact rational data of an affine cell branch.
#[derive(Debug, Clone)]
pub struct AffineCellBranch {
    pub lo: BigRational,
    pub hi: BigRational,
    pub slope: BigRational,
    pub intercept: BigRational,
}

/// Split `x` into (cell, fractional part) with the fraction in `[0, 1)`.
pub fn split_cell(x: f64) -> (i64, f64) {
    let f = x.floor();
    let mut j = f as i64;
    let mut u = x - f;
    if u >= 1.0 {
        j += 1;
        u -= 1.0;
    }
    if u < 0.0 {
        j -= 1;
        u += 1.0;
    }
    (j, u)
}

/// One lift step from fractional part `u`: returns (cell jump, new fraction).
fn lift_step(cell: &[Branch], u: f64) -> Option<(i64, f64)> {
    let b = cell.iter().find(|b| b.contains(u))?;
    let y = b.forward.eval(u);
    if !y.is_finite() {
        return None;
    }
    let (dj, frac) = split_cell(y);
    Some((dj, frac))
}

fn check_tiling(branches: &[Branch], lo: f64, hi: f64) -> Result<()> {
    if branches.is_empty() {
        return Err(Error::Construction("no branches supplied".into()));
    }
    let tol = 1e-12;
    let first = branches.first().unwrap();
    let last = branches.last().unwrap();
    let starts_ok = if lo.is_finite() {
        (first.lo - lo).abs() <= tol
    } else {
        first.lo == lo
    };
    let ends_ok = if hi.is_finite() {
        (last.hi - hi).abs() <= tol
    } else {
        last.hi == hi
    };
    if !starts_ok || !ends_ok {
        return Err(Error::Construction(format!(
            "branch domains must tile [{lo}, {hi}), got [{}, {})",
            first.lo, last.hi
        )));
    }
    for w in branches.windows(2) {
        if (w[0].hi - w[1].lo).abs() > tol {
            return Err(Error::Construction(format!(
                "gap or overlap between branch domains at {} vs {}",
                w[0].hi, w[1].lo
            )));
        }
    }
    Ok(())
}

/// If every cell branch is affine with integer image endpoints, the cell
/// process is Markov and the jump law is exact: jump `j` gets probability
/// `sum_b 1/slope_b` over the branches whose image covers `[j, j+1)`.
fn detect_jump_law(cell: &[Branch]) -> Option<JumpLaw> {
    let mut k_min = i64::MAX;
    let mut k_max = i64::MIN;
    let mut data = Vec::new();
    for b in cell {
        let slope = match b.forward {
            Formula::Affine { slope, .. } => slope,
            _ => return None,
        };
        let (ilo, ihi) = b.image();
        let lo_i = ilo.round();
        let hi_i = ihi.round();
        if (ilo - lo_i).abs() > 1e-9 || (ihi - hi_i).abs() > 1e-9 {
            return None;
        }
        let (lo_i, hi_i) = (lo_i as i64, hi_i as i64);
        k_min = k_min.min(lo_i);
        k_max = k_max.max(hi_i);
        data.push((lo_i, hi_i, rat(slope)));
    }
    if k_min >= k_max {
        return None;
    }
    let mut probs = vec![BigRational::zero(); (k_max - k_min) as usize];
    for (lo_i, hi_i, slope) in data {
        let p = BigRational::one() / slope;
        for j in lo_i..hi_i {
            probs[(j - k_min) as usize] += &p;
        }
    }
    let total: BigRational = probs.iter().sum();
    if !total.is_one() {
        return None;
    }
    JumpLaw::new(k_min, &probs).ok()
}

/// The induced circle map `T mod period` on `[0, period)`.
#[derive(Debug, Clone)]
pub struct QuotientMap {
    period: i64,
    base: PiecewiseMap,
}

impl QuotientMap {
    pub fn period(&self) -> i64 {
        self.period
    }

    pub fn apply(&self, x: f64) -> Result<f64> {
        self.iterate(x, 1)
    }

    /// `T_I^n(x)` for `x` in `[0, period)`, computed with the same branch
    /// evaluations as the lift orbit so the two stay consistent.
    pub fn iterate(&self, x: f64, n: usize) -> Result<f64> {
        if !(0.0 <= x && x < self.period as f64) {
            return Err(Error::Precondition(format!(
                "quotient orbit needs x in [0, {}), got {x}",
                self.period
            )));
        }
        let cell = match &self.base.repr {
            MapRepr::Lift { cell } => cell,
            _ => unreachable!("quotient maps are built from lifts"),
        };
        let (mut c, mut u) = split_cell(x);
        for step in 0..n {
            let (dj, u2) =
                lift_step(cell, u).ok_or(Error::SingularOrbit { x: c as f64 + u, step })?;
            c = (c + dj).rem_euclid(self.period);
            u = u2;
        }
        Ok(c as f64 + u)
    }
}

/// Serializable custom-map specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub kind: MapSpecKind,
    pub branches: Vec<BranchSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapSpecKind {
    Lift,
    Explicit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub domain: [f64; 2],
    pub forward: Formula,
    pub inverse: Formula,
    pub derivative: Formula,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weyl_points(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        // Golden-ratio low-discrepancy sequence.
        let phi_inv = 0.618_033_988_749_894_9_f64;
        (0..n)
            .map(|i| {
                let u = ((i as f64 + 1.0) * phi_inv).fract();
                lo + (hi - lo) * u
            })
            .collect()
    }

    #[test]
    fn boole_pointwise_values() {
        let t = PiecewiseMap::boole();
        assert_eq!(t.branch_count(), 2);
        assert_eq!(t.apply(1.0).unwrap(), 0.0);
        assert_eq!(t.apply(2.0).unwrap(), 1.5);
        // Oddness holds exactly in floating point.
        for x in weyl_points(200, 0.01, 40.0) {
            assert_eq!(t.apply(-x).unwrap(), -t.apply(x).unwrap());
        }
    }

    #[test]
    fn boole_preimages_of_zero() {
        let t = PiecewiseMap::boole();
        let mut pre = t.preimages(0.0).unwrap();
        pre.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert_eq!(pre.len(), 2);
        assert!((pre[0].0 + 1.0).abs() < 1e-15 && (pre[0].1 - 0.5).abs() < 1e-15);
        assert!((pre[1].0 - 1.0).abs() < 1e-15 && (pre[1].1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn boole_preimages_match_quadratic_formula() {
        let t = PiecewiseMap::boole();
        let y = 10.0;
        let pre = t.preimages(y).unwrap();
        // Roots of x^2 - 10x - 1 = 0.
        let s = (y * y + 4.0f64).sqrt();
        let roots = [(y - s) / 2.0, (y + s) / 2.0];
        for (p, r) in pre.iter().zip(roots) {
            assert!((p.0 - r).abs() < 1e-12 * r.abs().max(1.0), "{} vs {}", p.0, r);
        }
        let sum: f64 = pre.iter().map(|(_, w)| w).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boole_pole_is_singular() {
        let t = PiecewiseMap::boole();
        assert!(matches!(t.apply(0.0), Err(Error::SingularOrbit { .. })));
        assert!(matches!(t.iterate(1e-305, 1), Err(Error::SingularOrbit { .. })));
    }

    #[test]
    fn random_walk_values_and_law() {
        let t = PiecewiseMap::random_walk(-1, 2).unwrap();
        assert!((t.apply(1.2).unwrap() - 0.6).abs() < 1e-12);
        let law = t.jump_law().unwrap();
        for j in -1..=1 {
            assert_eq!(law.probability(j), rat(1.0) / rat(3.0));
        }
        let t02 = PiecewiseMap::random_walk(0, 2).unwrap();
        assert_eq!(t02.apply(0.25).unwrap(), 0.5);
        assert!(PiecewiseMap::random_walk(0, 1).is_err());
    }

    #[test]
    fn rw_preimages_have_weight_one_third() {
        let t = PiecewiseMap::random_walk(-1, 2).unwrap();
        let pre = t.preimages(0.5).unwrap();
        assert_eq!(pre.len(), 3);
        for (_, w) in &pre {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn preimage_weights_sum_to_one_everywhere() {
        for map in [PiecewiseMap::boole(), PiecewiseMap::random_walk(-1, 2).unwrap()] {
            for y in weyl_points(10_000, -50.0, 50.0) {
                let sum: f64 = map.preimages(y).unwrap().iter().map(|(_, w)| w).sum();
                assert!((sum - 1.0).abs() < 1e-10, "{} at y={y}", sum - 1.0);
            }
        }
    }

    #[test]
    fn iterate_identity_and_boole_orbit() {
        let t = PiecewiseMap::boole();
        assert_eq!(t.iterate(1.2345, 0).unwrap(), 1.2345);
        let two_steps = t.iterate(2.0, 2).unwrap();
        assert!((two_steps - (1.5 - 1.0 / 1.5)).abs() < 1e-15);
    }

    #[test]
    fn translation_equivariance_of_lifts() {
        let t = PiecewiseMap::random_walk(-1, 2).unwrap();
        // Dyadic sample points so that x + m is exactly representable;
        // otherwise the rounding of the *input* x + m is amplified by the
        // expansion and the comparison tests nothing about the map.
        for x in weyl_points(100, 0.0, 1.0) {
            let x = (x * (1u64 << 30) as f64).round() / (1u64 << 30) as f64;
            for m in [-7i64, 3, 25] {
                for n in [1usize, 5, 20] {
                    let a = t.iterate(x + m as f64, n).unwrap();
                    let b = t.iterate(x, n).unwrap() + m as f64;
                    assert!((a - b).abs() < 1e-9, "x={x} m={m} n={n}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn quotient_orbit_matches_lift_mod_one() {
        let t = PiecewiseMap::random_walk(-1, 2).unwrap();
        let q = t.quotient(1).unwrap();
        for x in weyl_points(50, 0.0, 1.0) {
            for n in [1usize, 10, 20] {
                let full = t.iterate(x + 4.0, n).unwrap();
                let quot = q.iterate(x, n).unwrap();
                let diff = (full - full.floor() - quot).abs();
                assert!(diff < 1e-9 || (1.0 - diff).abs() < 1e-9, "n={n} diff={diff}");
            }
        }
    }

    #[test]
    fn lift_drift_decomposes_into_jumps() {
        // The orbit value equals the quotient orbit plus the integer drift
        // reconstructed from the jump sequence.
        let t = PiecewiseMap::random_walk(-1, 2).unwrap();
        let q = t.quotient(1).unwrap();
        let x = 0.7;
        let n = 3;
        // Reconstruct drift by stepping the quotient orbit and reading the
        // jump of each lift step independently.
        let mut drift = 0i64;
        let mut u: f64 = x;
        for _ in 0..n {
            let y: f64 = -1.0 + 3.0 * u; // phi for rw:-1:2
            drift += y.floor() as i64;
            u = y - y.floor();
        }
        let expected = q.iterate(x, n).unwrap() + drift as f64;
        let got = t.iterate(x, n).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn custom_linear_spec_matches_random_walk() {
        let spec = MapSpec {
            kind: MapSpecKind::Lift,
            branches: vec![BranchSpec {
                domain: [0.0, 1.0],
                forward: Formula::Affine { slope: 3.0, intercept: -1.0 },
                inverse: Formula::Affine { slope: 1.0 / 3.0, intercept: 1.0 / 3.0 },
                derivative: Formula::Constant { value: 3.0 },
            }],
        };
        let custom = PiecewiseMap::custom("custom:test", &spec).unwrap();
        let rw = PiecewiseMap::random_walk(-1, 2).unwrap();
        assert_eq!(custom.jump_law(), rw.jump_law());
        assert!(custom.preservation_report().unwrap().max_deviation < 1e-10);
        for x in weyl_points(1000, -20.0, 20.0) {
            let a = custom.apply(x).unwrap();
            let b = rw.apply(x).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} vs {b} at {x}");
        }
    }

    #[test]
    fn non_preserving_spec_is_rejected() {
        // Fractional image endpoints with mismatched slopes: the preimage
        // weight sum is 19/15 on part of the line and below 1 elsewhere.
        let spec = MapSpec {
            kind: MapSpecKind::Lift,
            branches: vec![
                BranchSpec {
                    domain: [0.0, 0.5],
                    forward: Formula::Affine { slope: 5.0, intercept: 0.0 },
                    inverse: Formula::Affine { slope: 0.2, intercept: 0.0 },
                    derivative: Formula::Constant { value: 5.0 },
                },
                BranchSpec {
                    domain: [0.5, 1.0],
                    forward: Formula::Affine { slope: 3.0, intercept: -1.5 },
                    inverse: Formula::Affine { slope: 1.0 / 3.0, intercept: 0.5 },
                    derivative: Formula::Constant { value: 3.0 },
                },
            ],
        };
        match PiecewiseMap::custom("custom:bad", &spec) {
            Err(Error::Construction(msg)) => assert!(msg.contains("preserve"), "{msg}"),
            other => panic!("expected construction error, got {other:?}"),
        }
    }

    #[test]
    fn manual_boole_branches_match_builtin() {
        let spec = MapSpec {
            kind: MapSpecKind::Explicit,
            branches: vec![
                BranchSpec {
                    domain: [f64::NEG_INFINITY, 0.0],
                    forward: Formula::Boole,
                    inverse: Formula::BooleInverseLower,
                    derivative: Formula::BooleDerivative,
                },
                BranchSpec {
                    domain: [0.0, f64::INFINITY],
                    forward: Formula::Boole,
                    inverse: Formula::BooleInverseUpper,
                    derivative: Formula::BooleDerivative,
                },
            ],
        };
        let custom = PiecewiseMap::custom("custom:boole", &spec).unwrap();
        let builtin = PiecewiseMap::boole();
        for x in weyl_points(500, -30.0, 30.0) {
            if x.abs() < 1e-6 {
                continue;
            }
            assert_eq!(custom.apply(x).unwrap(), builtin.apply(x).unwrap());
        }
    }

    #[test]
    fn exact_pullback_through_rw_branches() {
        use crate::interval::{rat_int, IntervalSet};
        let t = PiecewiseMap::random_walk(-1, 2).unwrap();
        // T^{-1}[0, 3) should have total measure 3.
        let parts = t
            .pull_back_interval(&rat_int(0), &rat_int(3))
            .unwrap();
        let set = IntervalSet::from_parts(parts);
        assert_eq!(set.measure(), rat_int(3));
    }

    #[test]
    fn map_catalog_resolution() {
        assert!(PiecewiseMap::from_id("boole").is_ok());
        assert!(PiecewiseMap::from_id("rw:-1:2").is_ok());
        assert!(PiecewiseMap::from_id("rw:0:1").is_err());
        assert!(matches!(
            PiecewiseMap::from_id("bool"),
            Err(Error::UnknownId { .. })
        ));
    }
}
