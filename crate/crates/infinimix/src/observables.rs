//! Global and local observables.
//!
//! Global observables are bounded functions that look qualitatively the same
//! across the line (constants, sign, periodic profiles, cell-step
//! functions). Local observables are integrable densities with compact
//! support. Both carry structural tags so estimators can dispatch onto the
//! exact lattice path or the quadrature path; tags encode the concrete
//! subspaces the experiments actually use, not membership proofs.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

use crate::error::{Error, Result};
use crate::interval::rat;
use crate::lattice::LatticeMeasure;
use crate::maps::split_cell;
use crate::quad::{self, DEFAULT_BUDGET};

/// Structural tags of a global observable.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TagSet {
    /// `F(x + j) = F(x)` for this integer period.
    pub periodic: Option<i64>,
    /// Constant on every unit cell `[j, j+1)` (up to a null set).
    pub lattice_step: bool,
    /// `F(-x) = -F(x)`.
    pub odd_symmetric: bool,
    /// The windowed means `(2j)^{-1} int_{q-j}^{q+j} F` converge uniformly
    /// in the center `q`.
    pub uniform_cesaro: bool,
}

/// Profile of a periodic observable on one period `[0, j)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `cos(2 pi x / period)`
    Cosine,
    /// `1_{[a, b)}` inside the period
    Indicator { a: f64, b: f64 },
    /// One value per unit cell of the period.
    CellValues(Vec<f64>),
}

/// Step function on unit cells with constant tails.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFn {
    pub offset: i64,
    pub values: Vec<f64>,
    pub left_tail: f64,
    pub right_tail: f64,
}

impl StepFn {
    pub fn cell(&self, j: i64) -> f64 {
        let idx = j - self.offset;
        if idx < 0 {
            self.left_tail
        } else if idx as usize >= self.values.len() {
            self.right_tail
        } else {
            self.values[idx as usize]
        }
    }

    pub fn bound(&self) -> f64 {
        self.values
            .iter()
            .fold(self.left_tail.abs().max(self.right_tail.abs()), |a, v| {
                a.max(v.abs())
            })
    }
}

type CellCache = Arc<Mutex<HashMap<i64, f64>>>;

#[derive(Debug, Clone)]
enum GlobalKind {
    Constant(f64),
    Sign,
    Periodic { period: i64, profile: Profile },
    LatticeStep(StepFn),
    /// Conditional expectation on the cell sigma-algebra of an observable
    /// with no exact projection; cells are integrated lazily and cached.
    Projected { inner: Arc<GlobalObservable>, cache: CellCache },
    Combination(Vec<(f64, Arc<GlobalObservable>)>),
}

/// A bounded test function `F` with structural tags.
#[derive(Debug, Clone)]
pub struct GlobalObservable {
    kind: GlobalKind,
    bound_norm: f64,
    tags: TagSet,
    id: String,
}

impl GlobalObservable {
    pub fn constant(c: f64) -> Self {
        GlobalObservable {
            kind: GlobalKind::Constant(c),
            bound_norm: c.abs(),
            tags: TagSet {
                lattice_step: true,
                uniform_cesaro: true,
                odd_symmetric: c == 0.0,
                periodic: Some(1),
            },
            id: if c == 1.0 { "one".into() } else { format!("const:{c}") },
        }
    }

    pub fn one() -> Self {
        GlobalObservable::constant(1.0)
    }

    /// `sign(x)`, with `sign(0) = 0` so odd symmetry is exact.
    pub fn sign() -> Self {
        GlobalObservable {
            kind: GlobalKind::Sign,
            bound_norm: 1.0,
            tags: TagSet {
                odd_symmetric: true,
                ..TagSet::default()
            },
            id: "sign".into(),
        }
    }

    pub fn periodic(period: i64, profile: Profile, id: String) -> Result<Self> {
        if period < 1 {
            return Err(Error::Precondition(format!("period must be >= 1, got {period}")));
        }
        if let Profile::Indicator { a, b } = profile {
            if !(0.0 <= a && a < b && b <= period as f64) {
                return Err(Error::Precondition(format!(
                    "indicator profile [{a}, {b}) must sit inside [0, {period})"
                )));
            }
        }
        if let Profile::CellValues(ref v) = profile {
            if v.len() != period as usize {
                return Err(Error::Precondition(
                    "cell-value profile length must equal the period".into(),
                ));
            }
        }
        let bound_norm = match &profile {
            Profile::Cosine => 1.0,
            Profile::Indicator { .. } => 1.0,
            Profile::CellValues(v) => v.iter().fold(0.0f64, |a, x| a.max(x.abs())),
        };
        let lattice_step = matches!(profile, Profile::CellValues(_));
        Ok(GlobalObservable {
            kind: GlobalKind::Periodic { period, profile },
            bound_norm,
            tags: TagSet {
                periodic: Some(period),
                uniform_cesaro: true,
                lattice_step,
                odd_symmetric: false,
            },
            id,
        })
    }

    /// `cos(2 pi x / j)`.
    pub fn cosine(period: i64) -> Result<Self> {
        GlobalObservable::periodic(period, Profile::Cosine, format!("cos:{period}"))
    }

    /// Indicator of `[0, j/2) + jZ`.
    pub fn half_cell(period: i64) -> Result<Self> {
        GlobalObservable::periodic(
            period,
            Profile::Indicator {
                a: 0.0,
                b: period as f64 / 2.0,
            },
            format!("halfcell:{period}"),
        )
    }

    pub fn lattice_step(step: StepFn, id: String) -> Self {
        let bound = step.bound();
        let uniform = step.left_tail == step.right_tail;
        GlobalObservable {
            kind: GlobalKind::LatticeStep(step),
            bound_norm: bound,
            tags: TagSet {
                lattice_step: true,
                uniform_cesaro: uniform,
                ..TagSet::default()
            },
            id,
        }
    }

    /// Pointwise linear combination `sum_i coeff_i F_i`.
    pub fn combination(terms: Vec<(f64, GlobalObservable)>) -> Self {
        let terms: Vec<(f64, Arc<GlobalObservable>)> =
            terms.into_iter().map(|(c, f)| (c, Arc::new(f))).collect();
        let bound_norm = terms.iter().map(|(c, f)| c.abs() * f.bound_norm).sum();
        let periodic = {
            let ps: Vec<Option<i64>> = terms.iter().map(|(_, f)| f.tags.periodic).collect();
            if ps.iter().all(|p| p.is_some() && *p == ps[0]) {
                ps[0]
            } else {
                None
            }
        };
        let tags = TagSet {
            periodic,
            lattice_step: terms.iter().all(|(_, f)| f.tags.lattice_step),
            odd_symmetric: terms.iter().all(|(_, f)| f.tags.odd_symmetric),
            uniform_cesaro: terms.iter().all(|(_, f)| f.tags.uniform_cesaro),
        };
        let id = terms
            .iter()
            .map(|(c, f)| format!("{c}*({})", f.id))
            .collect::<Vec<_>>()
            .join(" + ");
        GlobalObservable {
            kind: GlobalKind::Combination(terms),
            bound_norm,
            tags,
            id,
        }
    }

    /// Resolve a registry id:
    /// `one`, `const:<c>`, `sign`, `cos:<j>`, `halfcell:<j>`,
    /// `step:<left>:<right>:<offset>:<v0,v1,...>`.
    pub fn from_id(id: &str) -> Result<Self> {
        let parts: Vec<&str> = id.split(':').collect();
        let bad = || unknown_id(id, &["one", "const:<c>", "sign", "cos:<j>", "halfcell:<j>", "step:<l>:<r>:<offset>:<v,..>"]);
        match parts.as_slice() {
            ["one"] => Ok(GlobalObservable::one()),
            ["const", c] => Ok(GlobalObservable::constant(c.parse().map_err(|_| bad())?)),
            ["sign"] => Ok(GlobalObservable::sign()),
            ["cos", j] => GlobalObservable::cosine(j.parse().map_err(|_| bad())?),
            ["halfcell", j] => GlobalObservable::half_cell(j.parse().map_err(|_| bad())?),
            ["step", l, r, offset, values] => {
                let left_tail: f64 = l.parse().map_err(|_| bad())?;
                let right_tail: f64 = r.parse().map_err(|_| bad())?;
                let offset: i64 = offset.parse().map_err(|_| bad())?;
                let values: Vec<f64> = values
                    .split(',')
                    .map(|v| v.parse().map_err(|_| bad()))
                    .collect::<Result<_>>()?;
                Ok(GlobalObservable::lattice_step(
                    StepFn {
                        offset,
                        values,
                        left_tail,
                        right_tail,
                    },
                    id.to_string(),
                ))
            }
            _ => Err(bad()),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn bound_norm(&self) -> f64 {
        self.bound_norm
    }

    pub fn tags(&self) -> &TagSet {
        &self.tags
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            GlobalKind::Constant(c) => *c,
            GlobalKind::Sign => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            GlobalKind::Periodic { period, profile } => {
                let p = *period as f64;
                let mut r = x.rem_euclid(p);
                if r >= p {
                    r = 0.0;
                }
                match profile {
                    Profile::Cosine => (2.0 * std::f64::consts::PI * r / p).cos(),
                    Profile::Indicator { a, b } => {
                        if *a <= r && r < *b {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Profile::CellValues(v) => v[(r.floor() as usize).min(v.len() - 1)],
                }
            }
            GlobalKind::LatticeStep(step) => step.cell(split_cell(x).0),
            GlobalKind::Projected { .. } => {
                self.cell_mean(split_cell(x).0).map(|(v, _)| v).unwrap_or(f64::NAN)
            }
            GlobalKind::Combination(terms) => {
                terms.iter().map(|(c, f)| c * f.eval(x)).sum()
            }
        }
    }

    /// Mean of `F` over the unit cell `[j, j+1)` with an error bound.
    /// Exact kinds cost nothing; otherwise an adaptive quadrature result is
    /// cached per cell (idempotent fill, safe under concurrent readers).
    pub fn cell_mean(&self, j: i64) -> Result<(f64, f64)> {
        match &self.kind {
            GlobalKind::Constant(c) => Ok((*c, 0.0)),
            GlobalKind::Sign => Ok((if j >= 0 { 1.0 } else { -1.0 }, 0.0)),
            GlobalKind::LatticeStep(step) => Ok((step.cell(j), 0.0)),
            GlobalKind::Periodic { period, profile } => {
                let p = j.rem_euclid(*period);
                match profile {
                    Profile::Cosine => {
                        if *period == 1 {
                            Ok((0.0, 0.0))
                        } else {
                            let per = *period as f64;
                            let tau = 2.0 * std::f64::consts::PI / per;
                            let v = (per / (2.0 * std::f64::consts::PI))
                                * ((tau * (p as f64 + 1.0)).sin() - (tau * p as f64).sin());
                            Ok((v, 4.0 * f64::EPSILON))
                        }
                    }
                    Profile::Indicator { a, b } => {
                        let lo = (p as f64).max(*a);
                        let hi = ((p + 1) as f64).min(*b);
                        Ok(((hi - lo).max(0.0), f64::EPSILON))
                    }
                    Profile::CellValues(v) => Ok((v[p as usize], 0.0)),
                }
            }
            GlobalKind::Projected { inner, cache } => {
                if let Some(v) = cache.lock().unwrap().get(&j) {
                    return Ok((*v, 1e-10));
                }
                // Compute outside the lock; duplicate work is acceptable,
                // torn values are not.
                let splits = inner.breakpoints_in(j as f64, (j + 1) as f64);
                let r = quad::integrate(
                    |x| Ok(inner.eval(x)),
                    j as f64,
                    (j + 1) as f64,
                    1e-10,
                    DEFAULT_BUDGET,
                    &splits,
                )
                .map_err(|e| Error::CellQuadrature {
                    cell: j,
                    reason: e.to_string(),
                })?;
                cache.lock().unwrap().insert(j, r.value);
                Ok((r.value, 1e-10))
            }
            GlobalKind::Combination(terms) => {
                let mut v = 0.0;
                let mut e = 0.0;
                for (c, f) in terms {
                    let (vi, ei) = f.cell_mean(j)?;
                    v += c * vi;
                    e += c.abs() * ei;
                }
                Ok((v, e))
            }
        }
    }

    /// The conditional expectation `E(F | A_0)` on the sigma-algebra
    /// generated by the unit cells. Exact whenever the cell means are in
    /// closed form; projection is idempotent on lattice-step observables.
    pub fn project_to_lattice(&self) -> GlobalObservable {
        let tags = TagSet {
            lattice_step: true,
            periodic: self.tags.periodic,
            odd_symmetric: self.tags.odd_symmetric,
            uniform_cesaro: self.tags.uniform_cesaro,
        };
        match &self.kind {
            GlobalKind::Constant(_) | GlobalKind::LatticeStep(_) | GlobalKind::Projected { .. } => {
                self.clone()
            }
            GlobalKind::Sign => GlobalObservable {
                kind: GlobalKind::LatticeStep(StepFn {
                    offset: 0,
                    values: Vec::new(),
                    left_tail: -1.0,
                    right_tail: 1.0,
                }),
                bound_norm: 1.0,
                tags,
                id: format!("project({})", self.id),
            },
            GlobalKind::Periodic { period, .. } => {
                let values: Vec<f64> = (0..*period)
                    .map(|p| {
                        // cell_mean on periodic kinds is closed-form.
                        self.cell_mean(p).expect("closed-form cell mean").0
                    })
                    .collect();
                let bound = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                GlobalObservable {
                    kind: GlobalKind::Periodic {
                        period: *period,
                        profile: Profile::CellValues(values),
                    },
                    bound_norm: bound.min(self.bound_norm),
                    tags,
                    id: format!("project({})", self.id),
                }
            }
            GlobalKind::Combination(terms) => {
                // Projection is linear.
                let projected = terms
                    .iter()
                    .map(|(c, f)| (*c, f.project_to_lattice()))
                    .collect();
                let mut out = GlobalObservable::combination(projected);
                out.id = format!("project({})", self.id);
                out
            }
        }
    }

    /// Lazy, cached projection for observables without closed-form cell
    /// means. Exposed mostly for completeness; the built-in kinds all have
    /// exact projections.
    pub fn project_numerically(&self) -> GlobalObservable {
        GlobalObservable {
            kind: GlobalKind::Projected {
                inner: Arc::new(self.clone()),
                cache: Arc::new(Mutex::new(HashMap::new())),
            },
            bound_norm: self.bound_norm,
            tags: TagSet {
                lattice_step: true,
                periodic: self.tags.periodic,
                odd_symmetric: self.tags.odd_symmetric,
                uniform_cesaro: self.tags.uniform_cesaro,
            },
            id: format!("project({})", self.id),
        }
    }

    /// Discontinuity points of `F` inside `[lo, hi)`.
    pub fn breakpoints_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match &self.kind {
            GlobalKind::Constant(_) => {}
            GlobalKind::Sign => {
                if lo < 0.0 && 0.0 < hi {
                    out.push(0.0);
                }
            }
            GlobalKind::Periodic { period, profile } => {
                let p = *period as f64;
                match profile {
                    Profile::Cosine => {}
                    Profile::Indicator { a, b } => {
                        for anchor in [*a, *b] {
                            let mut m = ((lo - anchor) / p).floor();
                            loop {
                                let x = anchor + m * p;
                                if x >= hi {
                                    break;
                                }
                                if x > lo {
                                    out.push(x);
                                }
                                m += 1.0;
                            }
                        }
                    }
                    Profile::CellValues(_) => push_integers(&mut out, lo, hi),
                }
            }
            GlobalKind::LatticeStep(step) => {
                let from = step.offset.max(lo.ceil() as i64);
                let to = (step.offset + step.values.len() as i64).min(hi.floor() as i64);
                for j in from..=to {
                    let x = j as f64;
                    if x > lo && x < hi {
                        out.push(x);
                    }
                }
            }
            GlobalKind::Projected { .. } => push_integers(&mut out, lo, hi),
            GlobalKind::Combination(terms) => {
                for (_, f) in terms {
                    out.extend(f.breakpoints_in(lo, hi));
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    /// Split hints for quadrature over `[lo, hi)`: discontinuities plus a
    /// period grid for oscillatory profiles, so whole periods integrate to
    /// machine precision per panel.
    pub fn quadrature_hints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = self.breakpoints_in(lo, hi);
        if let GlobalKind::Periodic { period, profile: Profile::Cosine } = &self.kind {
            let p = *period as f64;
            let mut m = (lo / p).floor();
            loop {
                let x = m * p;
                if x >= hi {
                    break;
                }
                if x > lo {
                    out.push(x);
                }
                m += 1.0;
            }
            out.sort_by(|a, b| a.partial_cmp(b).unwrap());
            out.dedup();
        }
        out
    }

    /// Windowed Cesaro mean at half-width `j_max`: the mean over the probe
    /// grid of `(2j)^{-1} int_{q-j}^{q+j} F`, together with the largest
    /// deviation of a single window from that mean. A vanishing defect as
    /// `j_max` grows is the numerical signature of a uniform window limit.
    pub fn cesaro_mean(&self, q_grid: &[i64], j_max: i64) -> Result<(f64, f64)> {
        if j_max < 1 {
            return Err(Error::Precondition("j_max must be >= 1".into()));
        }
        if q_grid.is_empty() {
            return Err(Error::Precondition("probe grid must be nonempty".into()));
        }
        let mut means = Vec::with_capacity(q_grid.len());
        for &q in q_grid {
            let (a, b) = ((q - j_max) as f64, (q + j_max) as f64);
            let hints = self.quadrature_hints(a, b);
            let r = quad::integrate(
                |x| Ok(self.eval(x)),
                a,
                b,
                1e-9 * (b - a),
                DEFAULT_BUDGET,
                &hints,
            )?;
            means.push(r.value / (b - a));
        }
        let value = means.iter().sum::<f64>() / means.len() as f64;
        let defect = means
            .iter()
            .map(|m| (m - value).abs())
            .fold(0.0f64, f64::max);
        Ok((value, defect))
    }

    /// The complete, finite discontinuity set of `F` on the whole line,
    /// when there is one. Periodic step profiles have infinitely many
    /// breakpoints and return `None`.
    pub fn global_breakpoints(&self) -> Option<Vec<f64>> {
        match &self.kind {
            GlobalKind::Constant(_) => Some(Vec::new()),
            GlobalKind::Sign => Some(vec![0.0]),
            GlobalKind::Periodic { profile, .. } => match profile {
                Profile::Cosine => Some(Vec::new()),
                _ => None,
            },
            GlobalKind::LatticeStep(step) => Some(
                (step.offset..=step.offset + step.values.len() as i64)
                    .map(|j| j as f64)
                    .collect(),
            ),
            GlobalKind::Projected { .. } => None,
            GlobalKind::Combination(terms) => {
                let mut out = Vec::new();
                for (_, f) in terms {
                    out.extend(f.global_breakpoints()?);
                }
                out.sort_by(|a, b| a.partial_cmp(b).unwrap());
                out.dedup();
                Some(out)
            }
        }
    }

    /// Exact step representation, when the observable is (a.e.) constant on
    /// unit cells and eventually constant on both sides.
    pub fn exact_step(&self) -> Option<StepFn> {
        match &self.kind {
            GlobalKind::Constant(c) => Some(StepFn {
                offset: 0,
                values: Vec::new(),
                left_tail: *c,
                right_tail: *c,
            }),
            GlobalKind::Sign => Some(StepFn {
                offset: 0,
                values: Vec::new(),
                left_tail: -1.0,
                right_tail: 1.0,
            }),
            GlobalKind::LatticeStep(s) => Some(s.clone()),
            _ => None,
        }
    }

    /// Piecewise-constant periodic profile with rational breakpoints, when
    /// the observable has one; feeds the exact quotient-map machinery.
    pub fn pc_profile(&self) -> Option<PcProfile> {
        match &self.kind {
            GlobalKind::Constant(c) => Some(PcProfile {
                period: 1,
                pieces: vec![(rat(0.0), rat(1.0), *c)],
            }),
            GlobalKind::Periodic { period, profile } => {
                let p = rat(*period as f64);
                match profile {
                    Profile::Indicator { a, b } => {
                        let mut pieces = Vec::new();
                        if *a > 0.0 {
                            pieces.push((rat(0.0), rat(*a), 0.0));
                        }
                        pieces.push((rat(*a), rat(*b), 1.0));
                        if rat(*b) < p {
                            pieces.push((rat(*b), p, 0.0));
                        }
                        Some(PcProfile {
                            period: *period,
                            pieces,
                        })
                    }
                    Profile::CellValues(v) => Some(PcProfile {
                        period: *period,
                        pieces: v
                            .iter()
                            .enumerate()
                            .map(|(i, &val)| (rat(i as f64), rat((i + 1) as f64), val))
                            .collect(),
                    }),
                    Profile::Cosine => None,
                }
            }
            GlobalKind::Combination(terms) => {
                let profiles: Option<Vec<PcProfile>> =
                    terms.iter().map(|(_, f)| f.pc_profile()).collect();
                let profiles = profiles?;
                let period = profiles.first()?.period;
                if profiles.iter().any(|p| p.period != period) {
                    return None;
                }
                // Union of breakpoints; evaluate each piece at its midpoint.
                let mut cuts: Vec<BigRational> = vec![rat(0.0), rat(period as f64)];
                for p in &profiles {
                    for (lo, hi, _) in &p.pieces {
                        cuts.push(lo.clone());
                        cuts.push(hi.clone());
                    }
                }
                cuts.sort();
                cuts.dedup();
                let mut pieces = Vec::new();
                for w in cuts.windows(2) {
                    if w[0] >= w[1] {
                        continue;
                    }
                    let mid = (&w[0] + &w[1]) / rat(2.0);
                    let midf = crate::interval::rat_to_f64(&mid);
                    pieces.push((w[0].clone(), w[1].clone(), self.eval(midf)));
                }
                Some(PcProfile { period, pieces })
            }
            _ => None,
        }
    }
}

/// Piecewise-constant periodic profile: disjoint rational pieces covering
/// one period, each carrying a value.
#[derive(Debug, Clone)]
pub struct PcProfile {
    pub period: i64,
    pub pieces: Vec<(BigRational, BigRational, f64)>,
}

fn push_integers(out: &mut Vec<f64>, lo: f64, hi: f64) {
    let mut j = lo.floor() + 1.0;
    while j < hi {
        if j > lo {
            out.push(j);
        }
        j += 1.0;
    }
}

fn unknown_id(id: &str, patterns: &[&str]) -> Error {
    let mut ranked: Vec<(usize, String)> = patterns
        .iter()
        .map(|p| {
            let head = p.split(':').next().unwrap_or(p);
            let qhead = id.split(':').next().unwrap_or(id);
            (levenshtein(qhead, head), p.to_string())
        })
        .collect();
    ranked.sort();
    Error::UnknownId {
        id: id.to_string(),
        candidates: ranked.into_iter().take(3).map(|(_, p)| p).collect(),
    }
}

pub(crate) fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            cur[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone)]
enum LocalKind {
    Indicator { a: f64, b: f64, height: f64 },
    Gauss { center: f64, width: f64 },
    Triangle { a: f64, b: f64 },
    Combination(Vec<(f64, Arc<LocalObservable>)>),
}

/// An integrable density `g` with compact support.
#[derive(Debug, Clone)]
pub struct LocalObservable {
    kind: LocalKind,
    support: (f64, f64),
    integral: f64,
    l1_norm: f64,
    abs_sup: f64,
    lattice_form: Option<LatticeMeasure>,
    id: String,
}

impl LocalObservable {
    /// `1_{[a, b)}`, optionally scaled to integral one. The lattice form is
    /// present exactly when the endpoints are integers.
    pub fn indicator(a: f64, b: f64, normalize: bool) -> Result<Self> {
        if !(a < b) {
            return Err(Error::Precondition(format!("need a < b, got [{a}, {b})")));
        }
        let height = if normalize { 1.0 / (b - a) } else { 1.0 };
        let integral = if normalize { 1.0 } else { b - a };
        let lattice_form = if a.fract() == 0.0 && b.fract() == 0.0 && a.abs() < 1e15 {
            let (ai, bi) = (a as i64, b as i64);
            let mass = if normalize {
                BigRational::new(BigInt::from(1), BigInt::from(bi - ai))
            } else {
                BigRational::from_integer(BigInt::from(1))
            };
            let masses = vec![mass; (bi - ai) as usize];
            Some(LatticeMeasure::from_masses(ai, &masses))
        } else {
            None
        };
        let id = if normalize {
            format!("indicator:{a}:{b}:norm")
        } else {
            format!("indicator:{a}:{b}")
        };
        Ok(LocalObservable {
            kind: LocalKind::Indicator { a, b, height },
            support: (a, b),
            integral,
            l1_norm: integral.abs(),
            abs_sup: height,
            lattice_form,
            id,
        })
    }

    /// Gaussian density truncated to eight widths either side, so the
    /// support is finite; the integral is re-derived by quadrature at
    /// construction.
    pub fn gauss(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::Precondition(format!("width must be positive, got {width}")));
        }
        let support = (center - 8.0 * width, center + 8.0 * width);
        let peak = 1.0 / (width * (2.0 * std::f64::consts::PI).sqrt());
        let eval = move |x: f64| {
            let t = (x - center) / width;
            peak * (-0.5 * t * t).exp()
        };
        let r = quad::integrate(|x| Ok(eval(x)), support.0, support.1, 1e-12, DEFAULT_BUDGET, &[center])?;
        Ok(LocalObservable {
            kind: LocalKind::Gauss { center, width },
            support,
            integral: r.value,
            l1_norm: r.value,
            abs_sup: peak,
            lattice_form: None,
            id: format!("gauss:{center}:{width}"),
        })
    }

    /// Unit-mass tent on `[a, b]` with its peak at the midpoint.
    pub fn triangle(a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::Precondition(format!("need a < b, got [{a}, {b})")));
        }
        Ok(LocalObservable {
            kind: LocalKind::Triangle { a, b },
            support: (a, b),
            integral: 1.0,
            l1_norm: 1.0,
            abs_sup: 2.0 / (b - a),
            lattice_form: None,
            id: format!("triangle:{a}:{b}"),
        })
    }

    /// Mean-zero dipole `1_{[j, j+1)} - 1_{[k, k+1)}`.
    pub fn dipole(j: i64, k: i64) -> Result<Self> {
        if j == k {
            return Err(Error::Precondition("dipole cells must differ".into()));
        }
        let a = LocalObservable::indicator(j as f64, (j + 1) as f64, false)?;
        let b = LocalObservable::indicator(k as f64, (k + 1) as f64, false)?;
        let mut d = LocalObservable::combination(vec![(1.0, a), (-1.0, b)])?;
        d.id = format!("dipole:{j}:{k}");
        Ok(d)
    }

    /// Linear combination of densities. The lattice form survives when all
    /// parts carry one (floats convert to rationals losslessly).
    pub fn combination(terms: Vec<(f64, LocalObservable)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Precondition("empty combination".into()));
        }
        let terms: Vec<(f64, Arc<LocalObservable>)> =
            terms.into_iter().map(|(c, g)| (c, Arc::new(g))).collect();
        let support = (
            terms
                .iter()
                .map(|(_, g)| g.support.0)
                .fold(f64::INFINITY, f64::min),
            terms
                .iter()
                .map(|(_, g)| g.support.1)
                .fold(f64::NEG_INFINITY, f64::max),
        );
        let integral: f64 = terms.iter().map(|(c, g)| c * g.integral).sum();
        let abs_sup: f64 = terms.iter().map(|(c, g)| c.abs() * g.abs_sup).sum();
        let lattice_form = terms
            .iter()
            .map(|(c, g)| g.lattice_form.as_ref().map(|m| m.scale(&rat(*c))))
            .collect::<Option<Vec<_>>>()
            .map(|ms| {
                let mut it = ms.into_iter();
                let first = it.next().unwrap();
                it.fold(first, |acc, m| acc.add(&m))
            });
        let id = terms
            .iter()
            .map(|(c, g)| format!("{c}*({})", g.id))
            .collect::<Vec<_>>()
            .join(" + ");
        let kind = LocalKind::Combination(terms);
        let l1_norm = match &lattice_form {
            Some(m) => crate::interval::rat_to_f64(&m.total_variation()),
            None => {
                let probe = LocalObservable {
                    kind: kind.clone(),
                    support,
                    integral,
                    l1_norm: 0.0,
                    abs_sup,
                    lattice_form: None,
                    id: id.clone(),
                };
                let splits = probe.quadrature_splits();
                quad::integrate(
                    |x| Ok(probe.eval(x).abs()),
                    support.0,
                    support.1,
                    1e-10,
                    DEFAULT_BUDGET,
                    &splits,
                )?
                .value
            }
        };
        Ok(LocalObservable {
            kind,
            support,
            integral,
            l1_norm,
            abs_sup,
            lattice_form,
            id,
        })
    }

    /// Build a local observable directly from a lattice measure.
    pub fn from_lattice(m: LatticeMeasure, id: String) -> Self {
        use crate::interval::rat_to_f64;
        let support = (m.offset() as f64, (m.offset() + m.len() as i64) as f64);
        let integral = rat_to_f64(&m.total_mass());
        let l1 = rat_to_f64(&m.total_variation());
        let abs_sup = m
            .cells()
            .map(|(_, mass)| rat_to_f64(&mass).abs())
            .fold(0.0f64, f64::max);
        LocalObservable {
            kind: LocalKind::Combination(
                m.cells()
                    .map(|(j, mass)| {
                        (
                            rat_to_f64(&mass),
                            Arc::new(
                                LocalObservable::indicator(j as f64, (j + 1) as f64, false)
                                    .expect("unit cell"),
                            ),
                        )
                    })
                    .collect(),
            ),
            support,
            integral,
            l1_norm: l1,
            abs_sup,
            lattice_form: Some(m),
            id,
        }
    }

    /// Resolve a registry id:
    /// `indicator:<a>:<b>[:norm]`, `gauss:<center>:<width>`,
    /// `triangle:<a>:<b>`, `dipole:<j>:<k>`.
    pub fn from_id(id: &str) -> Result<Self> {
        let parts: Vec<&str> = id.split(':').collect();
        let bad = || {
            unknown_id(
                id,
                &[
                    "indicator:<a>:<b>[:norm]",
                    "gauss:<center>:<width>",
                    "triangle:<a>:<b>",
                    "dipole:<j>:<k>",
                ],
            )
        };
        match parts.as_slice() {
            ["indicator", a, b] => {
                LocalObservable::indicator(a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?, false)
            }
            ["indicator", a, b, "norm"] => {
                LocalObservable::indicator(a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?, true)
            }
            ["gauss", c, w] => {
                LocalObservable::gauss(c.parse().map_err(|_| bad())?, w.parse().map_err(|_| bad())?)
            }
            ["triangle", a, b] => {
                LocalObservable::triangle(a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?)
            }
            ["dipole", j, k] => {
                LocalObservable::dipole(j.parse().map_err(|_| bad())?, k.parse().map_err(|_| bad())?)
            }
            _ => Err(bad()),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// `mu(g)`.
    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// `||g||_1`.
    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn abs_sup(&self) -> f64 {
        self.abs_sup
    }

    pub fn lattice_form(&self) -> Option<&LatticeMeasure> {
        self.lattice_form.as_ref()
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            // Densities are evaluated on closed intervals: preimage sums can
            // land exactly on support endpoints, and the convention only
            // differs on a null set.
            LocalKind::Indicator { a, b, height } => {
                if *a <= x && x <= *b {
                    *height
                } else {
                    0.0
                }
            }
            LocalKind::Gauss { center, width } => {
                if x < self.support.0 || x > self.support.1 {
                    0.0
                } else {
                    let t = (x - center) / width;
                    (-0.5 * t * t).exp() / (width * (2.0 * std::f64::consts::PI).sqrt())
                }
            }
            LocalKind::Triangle { a, b } => {
                if x < *a || x >= *b {
                    0.0
                } else {
                    let mid = 0.5 * (a + b);
                    let h = 2.0 / (b - a);
                    if x < mid {
                        h * (x - a) / (mid - a)
                    } else {
                        h * (b - x) / (b - mid)
                    }
                }
            }
            LocalKind::Combination(terms) => terms.iter().map(|(c, g)| c * g.eval(x)).sum(),
        }
    }

    /// Non-smooth points: support ends, steps, kinks.
    pub fn quadrature_splits(&self) -> Vec<f64> {
        let mut out = vec![self.support.0, self.support.1];
        self.collect_breaks(&mut out);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    fn collect_breaks(&self, out: &mut Vec<f64>) {
        match &self.kind {
            LocalKind::Indicator { a, b, .. } => out.extend([*a, *b]),
            LocalKind::Gauss { .. } => {}
            LocalKind::Triangle { a, b } => out.extend([*a, 0.5 * (a + b), *b]),
            LocalKind::Combination(terms) => {
                for (_, g) in terms {
                    g.collect_breaks(out);
                }
            }
        }
    }

    /// Piecewise-constant representation with rational breakpoints, when
    /// the density is a finite combination of indicators.
    pub fn pc_pieces(&self) -> Option<Vec<(BigRational, BigRational, f64)>> {
        match &self.kind {
            LocalKind::Indicator { a, b, height } => Some(vec![(rat(*a), rat(*b), *height)]),
            LocalKind::Gauss { .. } | LocalKind::Triangle { .. } => None,
            LocalKind::Combination(terms) => {
                for (_, g) in terms {
                    g.pc_pieces()?;
                }
                let mut cuts: Vec<BigRational> = Vec::new();
                let mut stack = vec![self];
                while let Some(g) = stack.pop() {
                    match &g.kind {
                        LocalKind::Indicator { a, b, .. } => {
                            cuts.push(rat(*a));
                            cuts.push(rat(*b));
                        }
                        LocalKind::Combination(terms) => {
                            stack.extend(terms.iter().map(|(_, g)| g.as_ref()));
                        }
                        _ => unreachable!(),
                    }
                }
                cuts.sort();
                cuts.dedup();
                let mut pieces = Vec::new();
                for w in cuts.windows(2) {
                    let mid = (&w[0] + &w[1]) / rat(2.0);
                    let v = self.eval(crate::interval::rat_to_f64(&mid));
                    if v != 0.0 {
                        pieces.push((w[0].clone(), w[1].clone(), v));
                    }
                }
                Some(pieces)
            }
        }
    }

    /// Draw `x ~ |g| / ||g||_1` by rejection, returning the sign of `g(x)`.
    pub fn sample_abs<R: Rng>(&self, rng: &mut R) -> Result<(f64, f64)> {
        let (a, b) = self.support;
        for _ in 0..100_000 {
            let x = rng.gen_range(a..b);
            let v: f64 = rng.gen_range(0.0..self.abs_sup);
            let fx = self.eval(x);
            if v < fx.abs() {
                return Ok((x, fx.signum()));
            }
        }
        Err(Error::Precondition(format!(
            "rejection sampling failed for {}; is the density essentially zero?",
            self.id
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat_to_f64;

    #[test]
    fn sign_values_and_oddness() {
        let f = GlobalObservable::sign();
        assert_eq!(f.eval(3.2), 1.0);
        assert_eq!(f.eval(-0.1), -1.0);
        assert_eq!(f.eval(0.0), 0.0);
        assert!(f.tags().odd_symmetric);
        assert_eq!(f.bound_norm(), 1.0);
    }

    #[test]
    fn periodic_profiles_evaluate_modulo_period() {
        let cos1 = GlobalObservable::cosine(1).unwrap();
        assert!(cos1.eval(2.25).abs() < 1e-12); // cos(pi/2)
        let half = GlobalObservable::half_cell(1).unwrap();
        assert_eq!(half.eval(7.3), 1.0);
        let two = GlobalObservable::periodic(
            2,
            Profile::Indicator { a: 0.0, b: 1.0 },
            "test".into(),
        )
        .unwrap();
        assert_eq!(two.eval(3.5), 0.0); // 3.5 mod 2 = 1.5 >= 1
        assert_eq!(two.eval(4.5), 1.0);
    }

    #[test]
    fn observable_linearity_is_pointwise() {
        let f = GlobalObservable::sign();
        let g = GlobalObservable::cosine(1).unwrap();
        let combo = GlobalObservable::combination(vec![(2.0, f.clone()), (-0.5, g.clone())]);
        for i in 0..100 {
            let x = -3.0 + 0.061 * i as f64;
            let want = 2.0 * f.eval(x) - 0.5 * g.eval(x);
            assert!((combo.eval(x) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_exact_on_known_kinds() {
        // cos integrates to zero over every cell.
        let cosp = GlobalObservable::cosine(1).unwrap().project_to_lattice();
        for j in [-5i64, 0, 17] {
            assert_eq!(cosp.cell_mean(j).unwrap().0, 0.0);
        }
        // sign projects to -1 / +1.
        let signp = GlobalObservable::sign().project_to_lattice();
        assert_eq!(signp.cell_mean(3).unwrap().0, 1.0);
        assert_eq!(signp.cell_mean(-1).unwrap().0, -1.0);
        // the half-cell indicator projects to 1/2 on every cell.
        let halfp = GlobalObservable::half_cell(1).unwrap().project_to_lattice();
        for j in [-4i64, 0, 9] {
            assert_eq!(halfp.cell_mean(j).unwrap().0, 0.5);
        }
    }

    #[test]
    fn projection_is_idempotent_and_contractive() {
        let step = GlobalObservable::lattice_step(
            StepFn {
                offset: 0,
                values: vec![2.0, -1.0],
                left_tail: 0.5,
                right_tail: 0.25,
            },
            "step-test".into(),
        );
        let proj = step.project_to_lattice();
        for j in -3..5 {
            assert_eq!(proj.cell_mean(j).unwrap().0, step.cell_mean(j).unwrap().0);
        }
        // projection never exceeds the bound norm
        let f = GlobalObservable::half_cell(3).unwrap();
        let p = f.project_to_lattice();
        for j in -7..7 {
            assert!(p.cell_mean(j).unwrap().0.abs() <= f.bound_norm() + 1e-12);
        }
    }

    #[test]
    fn numeric_projection_matches_exact_projection() {
        let f = GlobalObservable::half_cell(1).unwrap();
        let lazy = f.project_numerically();
        for j in [-2i64, 0, 3] {
            let (v, e) = lazy.cell_mean(j).unwrap();
            assert!((v - 0.5).abs() <= e + 1e-12);
        }
    }

    #[test]
    fn cesaro_mean_examples() {
        let one = GlobalObservable::one();
        let (v, d) = one.cesaro_mean(&[0, 10, -10], 50).unwrap();
        assert!((v - 1.0).abs() < 1e-12 && d < 1e-12);

        let cos = GlobalObservable::cosine(1).unwrap();
        let (v, d) = cos.cesaro_mean(&[0, 5], 20).unwrap();
        assert!(v.abs() < 1e-10 && d < 1e-10);

        let sign = GlobalObservable::sign();
        let (v, d) = sign.cesaro_mean(&[0, 10, -10, 100, -100], 100).unwrap();
        assert!(v.abs() < 1e-9);
        assert!(d >= 0.9, "defect {d}");
        assert!(!sign.tags().uniform_cesaro);
    }

    #[test]
    fn indicator_constructors() {
        let raw = LocalObservable::indicator(0.0, 1.0, false).unwrap();
        assert_eq!(raw.integral(), 1.0);
        let lf = raw.lattice_form().unwrap();
        assert!(lf.mass(0).is_integer() && rat_to_f64(&lf.mass(0)) == 1.0);

        let norm = LocalObservable::indicator(-1.0, 1.0, true).unwrap();
        assert_eq!(norm.integral(), 1.0);
        assert_eq!(norm.eval(0.3), 0.5);
        assert_eq!(norm.eval(-1.0), 0.5);
        assert_eq!(norm.eval(1.0), 0.5);
        assert_eq!(norm.eval(1.0 + 1e-12), 0.0);
    }

    #[test]
    fn indicator_algebra_cancels_on_overlap() {
        let a = LocalObservable::indicator(0.0, 2.0, false).unwrap();
        let b = LocalObservable::indicator(1.0, 3.0, false).unwrap();
        let d = LocalObservable::combination(vec![(1.0, a), (-1.0, b)]).unwrap();
        assert!(d.integral().abs() < 1e-15);
        let lf = d.lattice_form().unwrap();
        assert_eq!(rat_to_f64(&lf.mass(0)), 1.0);
        assert_eq!(rat_to_f64(&lf.mass(1)), 0.0);
        assert_eq!(rat_to_f64(&lf.mass(2)), -1.0);
        assert!((d.l1_norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_step_quadrature_matches_cell_masses() {
        let g = LocalObservable::indicator(-2.0, 3.0, true).unwrap();
        let splits = g.quadrature_splits();
        let (a, b) = g.support();
        let r = quad::integrate(|x| Ok(g.eval(x)), a, b, 1e-12, 100_000, &splits).unwrap();
        let mass = rat_to_f64(&g.lattice_form().unwrap().total_mass());
        assert!((r.value - mass).abs() < 1e-10);
        assert!((r.value - g.integral()).abs() < 1e-10);
    }

    #[test]
    fn lattice_form_masses_reproduce_integral_exactly() {
        use num_traits::ToPrimitive;
        let g = LocalObservable::indicator(-2.0, 3.0, true).unwrap();
        let total = g.lattice_form().unwrap().total_mass();
        assert_eq!(total.to_f64().unwrap(), 1.0);
        assert!(total.is_integer());
    }

    #[test]
    fn gauss_integral_is_one_to_quadrature_tolerance() {
        let g = LocalObservable::gauss(0.0, 1.0).unwrap();
        assert!((g.integral() - 1.0).abs() < 1e-10);
        assert!(g.lattice_form().is_none());
        assert_eq!(g.eval(9.0), 0.0);
    }

    #[test]
    fn triangle_quadrature_matches_declared_integral() {
        let t = LocalObservable::triangle(0.0, 1.5).unwrap();
        let splits = t.quadrature_splits();
        let r = quad::integrate(|x| Ok(t.eval(x)), -1.0, 3.0, 1e-12, 100_000, &splits).unwrap();
        assert!((r.value - t.integral()).abs() < 1e-10);
    }

    #[test]
    fn registry_ids_resolve_and_reject() {
        assert!(GlobalObservable::from_id("sign").is_ok());
        assert!(GlobalObservable::from_id("cos:1").is_ok());
        assert!(GlobalObservable::from_id("halfcell:2").is_ok());
        assert!(GlobalObservable::from_id("step:0.25:0.25:0:1.25").is_ok());
        match GlobalObservable::from_id("sing") {
            Err(Error::UnknownId { candidates, .. }) => {
                assert_eq!(candidates[0], "sign");
            }
            other => panic!("expected unknown id, got {other:?}"),
        }
        assert!(LocalObservable::from_id("indicator:0:1").is_ok());
        assert!(LocalObservable::from_id("indicator:0:0.5:norm").is_ok());
        assert!(LocalObservable::from_id("dipole:0:1").is_ok());
        assert!(LocalObservable::from_id("gauss:0:2").is_ok());
    }

    #[test]
    fn sampling_follows_the_density() {
        use rand::SeedableRng;
        let g = LocalObservable::indicator(-1.0, 1.0, true).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut left = 0usize;
        let n = 20_000;
        for _ in 0..n {
            let (x, s) = g.sample_abs(&mut rng).unwrap();
            assert_eq!(s, 1.0);
            if x < 0.0 {
                left += 1;
            }
        }
        let frac = left as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.02, "left fraction {frac}");
    }

    #[test]
    fn pc_profile_of_half_cell() {
        let f = GlobalObservable::half_cell(1).unwrap();
        let p = f.pc_profile().unwrap();
        assert_eq!(p.period, 1);
        let total: f64 = p
            .pieces
            .iter()
            .map(|(lo, hi, v)| v * rat_to_f64(&(hi - lo)))
            .sum();
        assert!((total - 0.5).abs() < 1e-15);
    }
}
