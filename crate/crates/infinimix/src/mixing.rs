//! Correlation estimators and verdict suites for the infinite-mixing
//! notions: global-local (mean-zero and general), local-local (zero type),
//! global-global window grids, asymptotic coalescence and the equilibrium
//! functional.
//!
//! Every estimate carries an error bound; verdicts are three-valued, with
//! `Inconclusive` whenever the error bounds exceed half the tolerance —
//! honest numerics for limit statements that come with no rates. Monte
//! Carlo seeds are explicit inputs and land in every report.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::rat;
use crate::lattice::{LadderEntry, TransferLadder};
use crate::maps::PiecewiseMap;
use crate::observables::{GlobalObservable, LocalObservable};
use crate::quad::{self, DEFAULT_BUDGET};
use crate::quotient::{circle_correlation_exact, CirclePullback};
use crate::transfer::{
    composition_breakpoints, entry_dot, lattice_dot_rational, TransferEngine, DEFAULT_DEPTH_LIMIT,
};
use crate::volume::{estimate_avg, ExhaustiveFamily, IvVerdict, Window};

/// Default Monte Carlo sample count per time step.
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

/// Estimation method requested by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Pick the strongest admissible method (never silently Monte Carlo).
    Auto,
    ExactLattice,
    Quadrature,
    MonteCarlo { seed: u64, samples: usize },
}

/// Method actually used, recorded in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodUsed {
    ExactLattice,
    Quadrature,
    MonteCarlo { seed: u64, samples: usize },
}

/// `n -> (estimate of mu((F o T^n) g), error bound)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub n_values: Vec<usize>,
    pub estimates: Vec<f64>,
    pub error_bounds: Vec<f64>,
    pub method: MethodUsed,
}

impl CorrelationSeries {
    pub fn len(&self) -> usize {
        self.n_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_values.is_empty()
    }

    /// Index where the final third of the series starts.
    pub fn tail_start(&self, tail_fraction: f64) -> usize {
        tail_start(self.len(), tail_fraction)
    }
}

fn tail_start(len: usize, tail_fraction: f64) -> usize {
    let take = ((len as f64) * tail_fraction).ceil() as usize;
    len - take.clamp(1, len)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Pass;
        for v in verdicts {
            match (out, v) {
                (_, Verdict::Fail) => return Verdict::Fail,
                (Verdict::Pass, Verdict::Inconclusive) => out = Verdict::Inconclusive,
                _ => {}
            }
        }
        out
    }
}

/// Pass/fail/inconclusive for a single deviation with an error bound.
fn judge(dev: f64, err: f64, tol: f64) -> Verdict {
    if dev <= tol + err {
        if err > 0.5 * tol {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        }
    } else if err > 0.5 * tol {
        Verdict::Inconclusive
    } else {
        Verdict::Fail
    }
}

/// Correlation laboratory bound to one map, with shared transfer ladders
/// (read-concurrent, idempotent fill).
pub struct MixingLab {
    map: Arc<PiecewiseMap>,
    depth_limit: usize,
    ladders: Mutex<HashMap<String, TransferLadder>>,
    ladder_hits: AtomicUsize,
}

impl MixingLab {
    pub fn new(map: PiecewiseMap) -> Self {
        MixingLab {
            map: Arc::new(map),
            depth_limit: DEFAULT_DEPTH_LIMIT,
            ladders: Mutex::new(HashMap::new()),
            ladder_hits: AtomicUsize::new(0),
        }
    }

    pub fn with_depth_limit(mut self, limit: usize) -> Self {
        self.depth_limit = limit;
        self
    }

    pub fn map(&self) -> &Arc<PiecewiseMap> {
        &self.map
    }

    pub fn ladder_hits(&self) -> usize {
        self.ladder_hits.load(Ordering::Relaxed)
    }

    /// Install a prebuilt ladder (e.g. from the on-disk cache).
    pub fn install_ladder(&self, key: String, ladder: TransferLadder) {
        self.ladders.lock().unwrap().insert(key, ladder);
    }

    /// Snapshot of a ladder for persisting.
    pub fn export_ladder(&self, key: &str) -> Option<TransferLadder> {
        self.ladders.lock().unwrap().get(key).cloned()
    }

    /// Run `body` against the (extended) ladder for `g`.
    fn with_ladder<T>(
        &self,
        g: &LocalObservable,
        n_max: usize,
        body: impl FnOnce(&mut TransferLadder) -> Result<T>,
    ) -> Result<T> {
        let m = g.lattice_form().ok_or(Error::MethodMismatch {
            method: "exact-lattice",
            reason: format!("{} has no lattice form", g.id()),
        })?;
        let engine = TransferEngine::exact_lattice(self.map.clone())?;
        let mut ladders = self.ladders.lock().unwrap();
        let ladder = match ladders.entry(g.id().to_string()) {
            std::collections::hash_map::Entry::Occupied(e) => {
                let l = e.into_mut();
                if l.max_step() >= n_max {
                    self.ladder_hits.fetch_add(1, Ordering::Relaxed);
                }
                l
            }
            std::collections::hash_map::Entry::Vacant(e) => e.insert(engine.ladder(m.clone())?),
        };
        ladder.extend_to(n_max);
        body(ladder)
    }

    /// `mu((F o T^n) g)` for every requested `n`.
    pub fn correlate(
        &self,
        f: &GlobalObservable,
        g: &LocalObservable,
        n_list: &[usize],
        method: Method,
    ) -> Result<CorrelationSeries> {
        if n_list.is_empty() {
            return Err(Error::Precondition("empty n list".into()));
        }
        let method = self.resolve_method(f, g, method)?;
        match method {
            Method::ExactLattice => self.correlate_lattice(f, g, n_list),
            Method::Quadrature => self.correlate_quadrature(f, g, n_list),
            Method::MonteCarlo { seed, samples } => {
                self.correlate_monte_carlo(f, g, n_list, seed, samples)
            }
            Method::Auto => unreachable!("resolved above"),
        }
    }

    fn resolve_method(
        &self,
        f: &GlobalObservable,
        g: &LocalObservable,
        method: Method,
    ) -> Result<Method> {
        let lattice_ok = self.map.jump_law().is_some() && g.lattice_form().is_some();
        match method {
            Method::Auto => {
                if lattice_ok {
                    Ok(Method::ExactLattice)
                } else {
                    // Quadrature may still fail per n (budget), but it is the
                    // only deterministic fallback; Monte Carlo needs a seed.
                    Ok(Method::Quadrature)
                }
            }
            Method::ExactLattice => {
                if !lattice_ok {
                    return Err(Error::MethodMismatch {
                        method: "exact-lattice",
                        reason: format!(
                            "needs a random-walk map and a cell-step density (map {}, g {})",
                            self.map.id(),
                            g.id()
                        ),
                    });
                }
                let _ = f; // any bounded F works: only its cell means enter
                Ok(method)
            }
            Method::Quadrature | Method::MonteCarlo { .. } => Ok(method),
        }
    }

    /// Exact route: `mu((F o T^n) g) = <E(F | cells), P^n g>` whenever `g`
    /// is a cell-step density (then `P^n g` is one too).
    fn correlate_lattice(
        &self,
        f: &GlobalObservable,
        g: &LocalObservable,
        n_list: &[usize],
    ) -> Result<CorrelationSeries> {
        let fp = f.project_to_lattice();
        let n_max = *n_list.iter().max().unwrap();
        let (estimates, error_bounds) = self.with_ladder(g, n_max, |ladder| {
            let mut est = Vec::with_capacity(n_list.len());
            let mut err = Vec::with_capacity(n_list.len());
            for &n in n_list {
                let (v, e) = entry_dot(&fp, ladder.entry(n))?;
                est.push(v);
                err.push(e);
            }
            Ok((est, err))
        })?;
        Ok(CorrelationSeries {
            n_values: n_list.to_vec(),
            estimates,
            error_bounds,
            method: MethodUsed::ExactLattice,
        })
    }

    /// Deterministic route for compactly supported `g`: integrate
    /// `F(T^n x) g(x)` over the support, pre-splitting the panels at every
    /// point where `F o T^n` is non-smooth. Exceeding the budget is an
    /// error reported for the specific `n`.
    fn correlate_quadrature(
        &self,
        f: &GlobalObservable,
        g: &LocalObservable,
        n_list: &[usize],
    ) -> Result<CorrelationSeries> {
        let (slo, shi) = g.support();
        let mut estimates = Vec::with_capacity(n_list.len());
        let mut error_bounds = Vec::with_capacity(n_list.len());
        for &n in n_list {
            let mut splits = g.quadrature_splits();
            splits.extend(self.composition_splits(f, n, slo, shi)?);
            splits.sort_by(|a, b| a.partial_cmp(b).unwrap());
            splits.dedup();
            if splits.len() * 15 > DEFAULT_BUDGET {
                return Err(Error::QuadratureBudget {
                    budget: DEFAULT_BUDGET,
                    context: format!("n = {n}: {} oscillation pieces", splits.len()),
                });
            }
            let r = quad::integrate(
                |x| Ok(f.eval(self.map.iterate(x, n)?) * g.eval(x)),
                slo,
                shi,
                1e-10,
                DEFAULT_BUDGET,
                &splits,
            )
            .map_err(|e| match e {
                Error::QuadratureBudget { budget, context } => Error::QuadratureBudget {
                    budget,
                    context: format!("n = {n}: {context}"),
                },
                other => other,
            })?;
            estimates.push(r.value);
            error_bounds.push(r.error);
        }
        Ok(CorrelationSeries {
            n_values: n_list.to_vec(),
            estimates,
            error_bounds,
            method: MethodUsed::Quadrature,
        })
    }

    /// Points where `F o T^n` is non-smooth inside `[lo, hi]`.
    fn composition_splits(
        &self,
        f: &GlobalObservable,
        n: usize,
        lo: f64,
        hi: f64,
    ) -> Result<Vec<f64>> {
        if n == 0 {
            return Ok(f.quadrature_hints(lo, hi));
        }
        if self.map.is_translation_invariant() {
            let mut out: Vec<f64> = Vec::new();
            let mut j = lo.floor();
            while j < hi {
                if j > lo {
                    out.push(j);
                }
                j += 1.0;
            }
            if let Some(prof) = f.pc_profile() {
                if self.map.affine_cell_branches().is_some() {
                    let pull = CirclePullback::new(&self.map, prof.period)?;
                    let pulled = pull.pull_profile(&prof, n)?;
                    let period = prof.period as f64;
                    let cell_lo = (lo / period).floor() as i64;
                    let cell_hi = (hi / period).ceil() as i64;
                    for (set, _) in &pulled {
                        for (a, b) in set.parts() {
                            for c in cell_lo..=cell_hi {
                                for r in [a, b] {
                                    let x = crate::interval::rat_to_f64(r) + c as f64 * period;
                                    if x > lo && x < hi {
                                        out.push(x);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            out.sort_by(|a, b| a.partial_cmp(b).unwrap());
            out.dedup();
            Ok(out)
        } else {
            composition_breakpoints(&self.map, f, n, lo, hi, self.depth_limit)
        }
    }

    /// Monte Carlo route: `x ~ |g| / ||g||_1` with sign weights. The error
    /// bound is three standard errors; chunked streams keep the result
    /// bit-reproducible for a given seed regardless of thread scheduling.
    fn correlate_monte_carlo(
        &self,
        f: &GlobalObservable,
        g: &LocalObservable,
        n_list: &[usize],
        seed: u64,
        samples: usize,
    ) -> Result<CorrelationSeries> {
        let mut estimates = Vec::with_capacity(n_list.len());
        let mut error_bounds = Vec::with_capacity(n_list.len());
        for &n in n_list {
            let (est, err) = self.mc_single(f, g, n, seed, samples)?;
            estimates.push(est);
            error_bounds.push(err);
        }
        Ok(CorrelationSeries {
            n_values: n_list.to_vec(),
            estimates,
            error_bounds,
            method: MethodUsed::MonteCarlo { seed, samples },
        })
    }

    fn mc_single(
        &self,
        f: &GlobalObservable,
        g: &LocalObservable,
        n: usize,
        seed: u64,
        samples: usize,
    ) -> Result<(f64, f64)> {
        self.mc_single_fn(&|y| f.eval(y), g, n, seed, samples)
    }

    fn mc_single_fn(
        &self,
        f: &(dyn Fn(f64) -> f64 + Sync),
        g: &LocalObservable,
        n: usize,
        seed: u64,
        samples: usize,
    ) -> Result<(f64, f64)> {
        const CHUNK: usize = 1 << 15;
        let chunks = samples.div_ceil(CHUNK);
        let l1 = g.l1_norm();
        let partials: Vec<(f64, f64)> = (0..chunks)
            .into_par_iter()
            .map(|c| -> Result<(f64, f64)> {
                let stream = seed
                    ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    ^ (c as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
                let mut rng = ChaCha8Rng::seed_from_u64(stream);
                let take = CHUNK.min(samples - c * CHUNK);
                let mut sum = 0.0f64;
                let mut sumsq = 0.0f64;
                let mut done = 0usize;
                let mut singular_retries = 0usize;
                while done < take {
                    let (x, s) = g.sample_abs(&mut rng)?;
                    match self.map.iterate(x, n) {
                        Ok(y) => {
                            let v = s * f(y);
                            sum += v;
                            sumsq += v * v;
                            done += 1;
                        }
                        Err(Error::SingularOrbit { .. }) => {
                            // Null set: resample, with a sanity cap.
                            singular_retries += 1;
                            if singular_retries > 1000 {
                                return Err(Error::Precondition(
                                    "too many singular orbits while sampling".into(),
                                ));
                            }
                        }
                        Err(e) => return Err(e),
                    }
                }
                Ok((sum, sumsq))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for (s, sq) in partials {
            sum += s;
            sumsq += sq;
        }
        let nn = samples as f64;
        let mean = sum / nn;
        let var = ((sumsq - sum * sum / nn) / (nn - 1.0)).max(0.0);
        let est = l1 * mean;
        let se = l1 * (var / nn).sqrt();
        Ok((est, 3.0 * se))
    }
}

/// The finite dictionary standing in for the supremum over all normalized
/// densities: cell indicators at a spread of centers and two widths, plus
/// one mean-zero dipole. Reports name the dictionary and never claim the
/// true supremum.
pub fn glm3_dictionary() -> Vec<LocalObservable> {
    let mut out = Vec::new();
    for c in [0i64, 1, -1, 5, -5, 25, -25] {
        out.push(LocalObservable::indicator(c as f64, (c + 1) as f64, false).unwrap());
        out.push(LocalObservable::indicator((c - 1) as f64, (c + 1) as f64, false).unwrap());
    }
    out.push(LocalObservable::dipole(0, 1).unwrap());
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct GlmEntry {
    pub g_id: String,
    pub mu_g: f64,
    pub mean_zero_branch: bool,
    pub target: f64,
    pub tail_mean_dev: f64,
    pub tail_max_dev: f64,
    pub tail_max_err: f64,
    pub status: Verdict,
    pub series: CorrelationSeries,
}

/// Global-local verdict: every density's correlation tail must sit on
/// `Avg(F) mu(g)` (or 0 on the mean-zero branch) within tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct GlmReport {
    pub avg_f: f64,
    pub tol: f64,
    pub tail_fraction: f64,
    pub per_density: Vec<GlmEntry>,
    /// max over the dictionary of ||g||_1^{-1} * tail deviation
    pub glm3_restricted_index: f64,
    pub dictionary: Vec<String>,
    pub verdict: Verdict,
}

impl MixingLab {
    pub fn glm_verdict(
        &self,
        f: &GlobalObservable,
        g_set: &[LocalObservable],
        avg_f: f64,
        n_list: &[usize],
        method: Method,
        tol: f64,
    ) -> Result<GlmReport> {
        if g_set.is_empty() {
            return Err(Error::Precondition("empty density set".into()));
        }
        let tail_fraction = 1.0 / 3.0;
        let mut per_density = Vec::with_capacity(g_set.len());
        let mut glm3 = 0.0f64;
        for g in g_set {
            let mu = g.integral();
            let mean_zero = mu.abs() <= 1e-12;
            if !mean_zero && mu.abs() < 1e-6 {
                return Err(Error::Precondition(format!(
                    "mu({}) = {mu:e} is neither zero nor bounded away from zero",
                    g.id()
                )));
            }
            let series = self.correlate(f, g, n_list, method)?;
            let target = avg_f * mu;
            let from = series.tail_start(tail_fraction);
            let mut max_dev = 0.0f64;
            let mut sum_dev = 0.0f64;
            let mut max_err = 0.0f64;
            let mut statuses = Vec::new();
            for i in from..series.len() {
                let dev = (series.estimates[i] - target).abs();
                let err = series.error_bounds[i];
                max_dev = max_dev.max(dev);
                sum_dev += dev;
                max_err = max_err.max(err);
                statuses.push(judge(dev, err, tol));
            }
            let count = (series.len() - from) as f64;
            let status = Verdict::combine(statuses);
            glm3 = glm3.max(max_dev / g.l1_norm());
            per_density.push(GlmEntry {
                g_id: g.id().to_string(),
                mu_g: mu,
                mean_zero_branch: mean_zero,
                target,
                tail_mean_dev: sum_dev / count,
                tail_max_dev: max_dev,
                tail_max_err: max_err,
                status,
                series,
            });
        }
        let verdict = Verdict::combine(per_density.iter().map(|e| e.status));
        Ok(GlmReport {
            avg_f,
            tol,
            tail_fraction,
            per_density,
            glm3_restricted_index: glm3,
            dictionary: g_set.iter().map(|g| g.id().to_string()).collect(),
            verdict,
        })
    }
}

/// Local-local verdict: `mu((f o T^n) g) -> 0` (zero type).
#[derive(Debug, Clone, Serialize)]
pub struct LlmReport {
    pub f_id: String,
    pub g_id: String,
    pub tol: f64,
    pub tail_max: f64,
    pub verdict: Verdict,
    pub series: CorrelationSeries,
}

impl MixingLab {
    /// `f` must be bounded with finite support (it is both a local and a
    /// global observable). For cell-step `f`, `g` on a random-walk map the
    /// values are exact overlap masses `mu(T^{-n} A ∩ B)`.
    pub fn llm_verdict(
        &self,
        f: &LocalObservable,
        g: &LocalObservable,
        n_list: &[usize],
        method: Method,
        tol: f64,
    ) -> Result<LlmReport> {
        let series = match (local_as_global(f), method) {
            (Ok(f_global), _) => self.correlate(&f_global, g, n_list, method)?,
            // Non-lattice f: fall back to direct orbit sampling, the one
            // estimator that needs nothing but pointwise evaluations.
            (Err(_), Method::MonteCarlo { seed, samples }) => {
                let mut estimates = Vec::with_capacity(n_list.len());
                let mut error_bounds = Vec::with_capacity(n_list.len());
                for &n in n_list {
                    let (est, err) = self.mc_single_fn(&|y| f.eval(y), g, n, seed, samples)?;
                    estimates.push(est);
                    error_bounds.push(err);
                }
                CorrelationSeries {
                    n_values: n_list.to_vec(),
                    estimates,
                    error_bounds,
                    method: MethodUsed::MonteCarlo { seed, samples },
                }
            }
            (Err(e), _) => return Err(e),
        };
        let from = series.tail_start(1.0 / 3.0);
        let mut tail_max = 0.0f64;
        let mut statuses = Vec::new();
        for i in from..series.len() {
            let dev = series.estimates[i].abs();
            tail_max = tail_max.max(dev);
            statuses.push(judge(dev, series.error_bounds[i], tol));
        }
        Ok(LlmReport {
            f_id: f.id().to_string(),
            g_id: g.id().to_string(),
            tol,
            tail_max,
            verdict: Verdict::combine(statuses),
            series,
        })
    }
}

/// View a bounded compactly supported density as a global observable.
fn local_as_global(f: &LocalObservable) -> Result<GlobalObservable> {
    if let Some(m) = f.lattice_form() {
        let offset = m.offset();
        let values: Vec<f64> = m.cells().map(|(_, mass)| mass.to_f64().unwrap()).collect();
        Ok(GlobalObservable::lattice_step(
            crate::observables::StepFn {
                offset,
                values,
                left_tail: 0.0,
                right_tail: 0.0,
            },
            f.id().to_string(),
        ))
    } else {
        Err(Error::MethodMismatch {
            method: "local-local",
            reason: format!(
                "{} is not a cell-step density; only the lattice route is implemented for \
                 local-local correlations",
                f.id()
            ),
        })
    }
}

/// Window grid `mu_V((F o T^n) G)` with the joint-limit corner diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct GgmGrid {
    pub scales: Vec<f64>,
    pub n_values: Vec<usize>,
    /// entries[scale][n] = (value, error bound); None marks a cell whose
    /// quadrature budget ran out (missing, not failing).
    pub entries: Vec<Vec<Option<(f64, f64)>>>,
    pub target: f64,
    /// sup deviation from the target over the anti-diagonal `M = n`.
    pub corner: Vec<(f64, f64)>,
    pub tol: f64,
    pub verdict: Verdict,
}

impl MixingLab {
    pub fn ggm_grid(
        &self,
        f: &GlobalObservable,
        g: &GlobalObservable,
        fam: &ExhaustiveFamily,
        n_list: &[usize],
        tol: f64,
    ) -> Result<GgmGrid> {
        fam.validate()?;
        let avg_f = estimate_avg(f, fam, tol)?;
        let avg_g = estimate_avg(g, fam, tol)?;
        if avg_f.verdict == IvVerdict::NotUniform || avg_g.verdict == IvVerdict::NotUniform {
            return Err(Error::Precondition(
                "window averages of F and G must exist for a global-global grid".into(),
            ));
        }
        let target = avg_f.estimate * avg_g.estimate;
        let mut entries = Vec::with_capacity(fam.ladder.len());
        for &m in &fam.ladder {
            let mut row = Vec::with_capacity(n_list.len());
            for &n in n_list {
                row.push(self.ggm_cell(f, g, fam, m, n));
            }
            entries.push(row);
        }
        // Anti-diagonal: simultaneous M and n growth along the ladder.
        let mut corner = Vec::new();
        for &m in &fam.ladder {
            let n = m.round() as usize;
            if let Some((v, _)) = self.ggm_cell(f, g, fam, m, n) {
                corner.push((m, (v - target).abs()));
            }
        }
        let verdict = match corner.last() {
            Some((_, dev)) => {
                if *dev <= tol {
                    Verdict::Pass
                } else if corner.windows(2).all(|w| w[1].1 <= w[0].1) {
                    Verdict::Inconclusive // still descending, just not there
                } else {
                    Verdict::Fail
                }
            }
            None => Verdict::Inconclusive,
        };
        Ok(GgmGrid {
            scales: fam.ladder.clone(),
            n_values: n_list.to_vec(),
            entries,
            target,
            corner,
            tol,
            verdict,
        })
    }

    /// One grid cell: the worst case over the family members at scale `m`.
    fn ggm_cell(
        &self,
        f: &GlobalObservable,
        g: &GlobalObservable,
        fam: &ExhaustiveFamily,
        m: f64,
        n: usize,
    ) -> Option<(f64, f64)> {
        let windows = fam.windows_at(m).ok()?;
        let mut worst: Option<(f64, f64)> = None;
        for w in windows {
            let (v, e) = self.window_product(f, g, &w, n).ok()??;
            let keep = match worst {
                None => true,
                Some((bv, _)) => (v).abs() > bv.abs(),
            };
            if keep {
                worst = Some((v, e));
            }
        }
        worst
    }

    /// `mu_V((F o T^n) G)`: exact circle value for period-1 profiles on
    /// integer windows of a lift, adaptive quadrature otherwise.
    fn window_product(
        &self,
        f: &GlobalObservable,
        g: &GlobalObservable,
        w: &Window,
        n: usize,
    ) -> Result<Option<(f64, f64)>> {
        let integer_ends = w.lo.fract() == 0.0 && w.hi.fract() == 0.0;
        if self.map.is_translation_invariant() && integer_ends {
            if let (Some(fp), Some(gp)) = (f.pc_profile(), g.pc_profile()) {
                if fp.period == 1 && gp.period == 1 && self.map.affine_cell_branches().is_some() {
                    let v = circle_correlation_exact(&self.map, &fp, &gp, n)?;
                    return Ok(Some((v.to_f64().unwrap(), 1e-15)));
                }
            }
        }
        let mut hints = g.quadrature_hints(w.lo, w.hi);
        hints.extend(self.composition_splits(f, n, w.lo, w.hi).unwrap_or_default());
        hints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        hints.dedup();
        match quad::integrate(
            |x| Ok(f.eval(self.map.iterate(x, n)?) * g.eval(x)),
            w.lo,
            w.hi,
            1e-9 * w.measure(),
            DEFAULT_BUDGET,
            &hints,
        ) {
            Ok(r) => Ok(Some((r.value / w.measure(), r.error / w.measure()))),
            Err(Error::QuadratureBudget { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// Asymptotic-coalescence series for two normalized initial densities.
#[derive(Debug, Clone, Serialize)]
pub struct CoalescenceReport {
    pub n_values: Vec<usize>,
    /// `|corr(F, g/mu(g), n) - corr(F, h/mu(h), n)|`
    pub delta: Vec<f64>,
    /// companion bound `||P^n(g/mu(g) - h/mu(h))||_1 * sup|F|`, lattice mode
    pub bound: Option<Vec<f64>>,
    /// whether `delta <= bound` held at every step, exactly in the rational
    /// regime and within tracked error bounds beyond
    pub bound_holds: Option<bool>,
    pub tol: f64,
    pub verdict: Verdict,
    pub g_series: CorrelationSeries,
    pub h_series: CorrelationSeries,
}

impl MixingLab {
    pub fn coalescence_test(
        &self,
        f: &GlobalObservable,
        g: &LocalObservable,
        h: &LocalObservable,
        n_list: &[usize],
        method: Method,
        tol: f64,
    ) -> Result<CoalescenceReport> {
        for d in [g, h] {
            if d.integral().abs() <= 1e-12 {
                return Err(Error::ZeroMean {
                    id: d.id().to_string(),
                    mu: d.integral(),
                });
            }
        }
        let g_series = self.correlate(f, g, n_list, method)?;
        let h_series = self.correlate(f, h, n_list, method)?;
        let (mug, muh) = (g.integral(), h.integral());
        let delta: Vec<f64> = g_series
            .estimates
            .iter()
            .zip(&h_series.estimates)
            .map(|(a, b)| (a / mug - b / muh).abs())
            .collect();

        // Companion bound from the exact ladder of the normalized difference.
        let (bound, bound_holds) = match (g.lattice_form(), h.lattice_form(), self.map.jump_law()) {
            (Some(mg), Some(mh), Some(_)) => {
                let diff = mg
                    .scale(&(rat(1.0) / mg.total_mass()))
                    .sub(&mh.scale(&(rat(1.0) / mh.total_mass())));
                let engine = TransferEngine::exact_lattice(self.map.clone())?;
                let mut ladder = engine.ladder(diff)?;
                let fp = f.project_to_lattice();
                let bound_norm = f.bound_norm();
                let mut bounds = Vec::with_capacity(n_list.len());
                let mut holds = true;
                for &n in n_list {
                    let entry = ladder.entry(n);
                    let (tv, tv_err) = entry.total_variation();
                    bounds.push(tv * bound_norm);
                    match entry {
                        LadderEntry::Exact(m) => {
                            // both sides of the inequality in exact rationals
                            if let (Some(dg), Some(dh)) = (
                                exact_dot(&fp, g, self, n)?,
                                exact_dot(&fp, h, self, n)?,
                            ) {
                                let lhs = (dg / mg.total_mass() - dh / mh.total_mass()).abs();
                                let rhs = m.total_variation() * rat(bound_norm);
                                if lhs > rhs {
                                    holds = false;
                                }
                            }
                        }
                        LadderEntry::Float(_) => {
                            let d = delta[n_list.iter().position(|&k| k == n).unwrap()];
                            let slack = tv_err * bound_norm
                                + g_series.error_bounds.iter().cloned().fold(0.0, f64::max)
                                + h_series.error_bounds.iter().cloned().fold(0.0, f64::max);
                            if d > tv * bound_norm + slack {
                                holds = false;
                            }
                        }
                    }
                }
                (Some(bounds), Some(holds))
            }
            _ => (None, None),
        };

        let from = tail_start(n_list.len(), 1.0 / 3.0);
        let statuses: Vec<Verdict> = (from..n_list.len())
            .map(|i| {
                let err = (g_series.error_bounds[i] / mug.abs())
                    + (h_series.error_bounds[i] / muh.abs());
                judge(delta[i], err, tol)
            })
            .collect();
        let verdict = Verdict::combine(statuses);
        Ok(CoalescenceReport {
            n_values: n_list.to_vec(),
            delta,
            bound,
            bound_holds,
            tol,
            verdict,
            g_series,
            h_series,
        })
    }
}


/// Exact `<E(F|cells), P^n g>` when everything is rational, else `None`.
fn exact_dot(
    fp: &GlobalObservable,
    g: &LocalObservable,
    lab: &MixingLab,
    n: usize,
) -> Result<Option<BigRational>> {
    lab.with_ladder(g, n, |ladder| match ladder.entry(n) {
        LadderEntry::Exact(m) => lattice_dot_rational(fp, m),
        LadderEntry::Float(_) => Ok(None),
    })
}

/// Tail statistics of one normalized correlation series.
#[derive(Debug, Clone, Serialize)]
pub struct DensityTail {
    pub g_id: String,
    pub mu_g: f64,
    pub tail_mean: f64,
    /// max - min over the tail
    pub tail_spread: f64,
    pub tail_max_err: f64,
}

/// Estimate of the equilibrium value `rho(F)`: the common limit of
/// `mu((F o T^n) g) / mu(g)` over the witness densities. A small
/// coalescence defect (max pairwise gap of the tail means) is the numerical
/// evidence that `F` is an equilibrium observable at all.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumEstimate {
    pub rho_hat: f64,
    pub per_density: Vec<DensityTail>,
    pub coalescence_defect: f64,
    pub tail_fraction: f64,
    pub series: Vec<CorrelationSeries>,
}

impl MixingLab {
    pub fn estimate_rho(
        &self,
        f: &GlobalObservable,
        g_set: &[LocalObservable],
        n_list: &[usize],
        method: Method,
        tail_fraction: f64,
    ) -> Result<EquilibriumEstimate> {
        if g_set.is_empty() {
            return Err(Error::Precondition("empty density set".into()));
        }
        let mut per_density = Vec::with_capacity(g_set.len());
        let mut series_out = Vec::with_capacity(g_set.len());
        for g in g_set {
            let mu = g.integral();
            if mu.abs() <= 1e-12 {
                return Err(Error::ZeroMean {
                    id: g.id().to_string(),
                    mu,
                });
            }
            let series = self.correlate(f, g, n_list, method)?;
            let from = series.tail_start(tail_fraction);
            let tail: Vec<f64> = series.estimates[from..].iter().map(|v| v / mu).collect();
            let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
            let spread = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - tail.iter().cloned().fold(f64::INFINITY, f64::min);
            let max_err = series.error_bounds[from..]
                .iter()
                .map(|e| e / mu.abs())
                .fold(0.0f64, f64::max);
            per_density.push(DensityTail {
                g_id: g.id().to_string(),
                mu_g: mu,
                tail_mean,
                tail_spread: spread,
                tail_max_err: max_err,
            });
            series_out.push(series);
        }
        let rho_hat =
            per_density.iter().map(|d| d.tail_mean).sum::<f64>() / per_density.len() as f64;
        let mut defect = 0.0f64;
        for a in &per_density {
            for b in &per_density {
                defect = defect.max((a.tail_mean - b.tail_mean).abs());
            }
        }
        Ok(EquilibriumEstimate {
            rho_hat,
            per_density,
            coalescence_defect: defect,
            tail_fraction,
            series: series_out,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat_to_f64;
    use crate::observables::StepFn;

    fn rw_lab() -> MixingLab {
        MixingLab::new(PiecewiseMap::random_walk(-1, 2).unwrap())
    }

    fn boole_lab() -> MixingLab {
        MixingLab::new(PiecewiseMap::boole())
    }

    #[test]
    fn constant_f_returns_mass_in_all_methods() {
        let lab = rw_lab();
        let one = GlobalObservable::one();
        let g = LocalObservable::indicator(0.0, 1.0, false).unwrap();
        let ns = [0usize, 3, 7];
        let exact = lab.correlate(&one, &g, &ns, Method::ExactLattice).unwrap();
        for v in &exact.estimates {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let mc = lab
            .correlate(&one, &g, &ns, Method::MonteCarlo { seed: 11, samples: 4000 })
            .unwrap();
        for v in &mc.estimates {
            assert!((v - 1.0).abs() < 1e-9); // F = 1 has zero variance
        }
        let quad = lab.correlate(&one, &g, &[0, 1, 2], Method::Quadrature).unwrap();
        for v in &quad.estimates {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn boole_odd_symmetry_kills_correlations() {
        let lab = boole_lab();
        let sign = GlobalObservable::sign();
        let g = LocalObservable::indicator(-1.0, 1.0, true).unwrap();
        let ns: Vec<usize> = (0..=8).collect();
        let s = lab.correlate(&sign, &g, &ns, Method::Quadrature).unwrap();
        for (i, v) in s.estimates.iter().enumerate() {
            assert!(
                v.abs() <= 1e-8_f64.max(s.error_bounds[i]),
                "n={} estimate {v}",
                s.n_values[i]
            );
        }
    }

    #[test]
    fn quadrature_matches_exact_quotient_values() {
        // Truth from the exact circle pullback; the quadrature route must
        // agree within its reported error.
        let lab = rw_lab();
        let f = GlobalObservable::half_cell(1).unwrap();
        let g = LocalObservable::indicator(0.0, 0.5, true).unwrap();
        let ns: Vec<usize> = (0..=6).collect();
        let s = lab.correlate(&f, &g, &ns, Method::Quadrature).unwrap();
        let prof = f.pc_profile().unwrap();
        let pieces = g.pc_pieces().unwrap();
        for (i, &n) in ns.iter().enumerate() {
            let truth = rat_to_f64(
                &crate::quotient::line_correlation_exact(lab.map(), &prof, &pieces, n).unwrap(),
            );
            assert!(
                (s.estimates[i] - truth).abs() <= s.error_bounds[i] + 1e-9,
                "n={n}: {} vs {truth}",
                s.estimates[i]
            );
        }
        // and the n=1 value is the hand-computed 2/3
        assert!((s.estimates[1] - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn monte_carlo_agrees_with_exact_lattice() {
        // Numerical duality: direct orbit sampling against the adjoint
        // convolution route, within three standard errors.
        let lab = rw_lab();
        let f = GlobalObservable::lattice_step(
            StepFn {
                offset: -1,
                values: vec![0.3, -0.7, 1.1],
                left_tail: -0.2,
                right_tail: 0.4,
            },
            "step-test".into(),
        );
        let g = LocalObservable::indicator(0.0, 2.0, true).unwrap();
        let ns = [1usize, 5, 17];
        let exact = lab.correlate(&f, &g, &ns, Method::ExactLattice).unwrap();
        let mc = lab
            .correlate(&f, &g, &ns, Method::MonteCarlo { seed: 42, samples: 200_000 })
            .unwrap();
        for i in 0..ns.len() {
            let diff = (exact.estimates[i] - mc.estimates[i]).abs();
            assert!(
                diff <= mc.error_bounds[i],
                "n={}: exact {} vs mc {} (3se {})",
                ns[i],
                exact.estimates[i],
                mc.estimates[i],
                mc.error_bounds[i]
            );
        }
    }

    #[test]
    fn method_mismatch_reports() {
        let lab = boole_lab();
        let one = GlobalObservable::one();
        let g = LocalObservable::indicator(0.0, 1.0, false).unwrap();
        assert!(matches!(
            lab.correlate(&one, &g, &[1], Method::ExactLattice),
            Err(Error::MethodMismatch { .. })
        ));
    }

    #[test]
    fn glm_constant_f_passes_trivially() {
        let lab = rw_lab();
        let one = GlobalObservable::one();
        let gs = vec![
            LocalObservable::indicator(0.0, 1.0, false).unwrap(),
            LocalObservable::indicator(2.0, 5.0, true).unwrap(),
        ];
        let ns: Vec<usize> = (0..=20).collect();
        let rep = lab
            .glm_verdict(&one, &gs, 1.0, &ns, Method::ExactLattice, 1e-6)
            .unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        for e in &rep.per_density {
            assert!(e.tail_max_dev < 1e-12);
        }
    }

    #[test]
    fn glm_mean_zero_branch_bounded_by_lin_norm() {
        let lab = rw_lab();
        let sign = GlobalObservable::sign();
        let dipole = LocalObservable::dipole(0, 1).unwrap();
        let ns: Vec<usize> = (0..=60).collect();
        let rep = lab
            .glm_verdict(&sign, &[dipole.clone()], 0.0, &ns, Method::ExactLattice, 0.2)
            .unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        // |corr| <= ||F||_inf ||P^n g||_1 at every n
        let engine = TransferEngine::exact_lattice(lab.map().clone()).unwrap();
        let lin = engine.lin_norm(&dipole, &ns).unwrap();
        let series = &rep.per_density[0].series;
        for i in 0..series.len() {
            assert!(
                series.estimates[i].abs() <= lin.values[i] + 1e-12,
                "n={}: {} vs {}",
                ns[i],
                series.estimates[i],
                lin.values[i]
            );
        }
    }

    #[test]
    fn glm_cosine_correlations_decay_by_fourier_shifting() {
        // Under 3x mod 1 the cosine is pushed onto the frequency-3^n mode,
        // whose coefficient against any fixed profile decays like 9^{-n};
        // cell densities kill it exactly (whole-period integrals).
        let lab = rw_lab();
        let cos = GlobalObservable::cosine(1).unwrap();
        let gs = vec![
            LocalObservable::indicator(0.0, 1.0, false).unwrap(),
            LocalObservable::triangle(0.0, 1.5).unwrap(),
        ];
        let ns: Vec<usize> = (0..=6).collect();
        let rep = lab
            .glm_verdict(&cos, &gs, 0.0, &ns, Method::Quadrature, 5e-3)
            .unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        for e in &rep.per_density {
            assert!(e.tail_max_dev < 1e-4, "{}: {}", e.g_id, e.tail_max_dev);
        }
        // the cell indicator vanishes at every n, not just in the tail
        for v in &rep.per_density[0].series.estimates {
            assert!(v.abs() < 1e-9, "cell-density correlation {v}");
        }
    }

    #[test]
    fn llm_exact_overlap_values() {
        let lab = rw_lab();
        let cell = LocalObservable::indicator(0.0, 1.0, false).unwrap();
        let ns: Vec<usize> = (0..=40).collect();
        let rep = lab
            .llm_verdict(&cell, &cell, &ns, Method::ExactLattice, 0.2)
            .unwrap();
        // p_2(0) = 1/3
        assert!((rep.series.estimates[2] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(rep.verdict, Verdict::Pass);

        // disjoint far supports: one step cannot jump 40 cells
        let far = LocalObservable::indicator(40.0, 41.0, false).unwrap();
        let rep = lab
            .llm_verdict(&cell, &far, &[1], Method::ExactLattice, 0.2)
            .unwrap();
        assert_eq!(rep.series.estimates[0], 0.0);
    }

    #[test]
    fn llm_monte_carlo_for_non_lattice_f() {
        let lab = rw_lab();
        let tent = LocalObservable::triangle(0.0, 1.5).unwrap();
        let g = LocalObservable::indicator(0.0, 1.0, false).unwrap();
        let rep = lab
            .llm_verdict(&tent, &g, &[0, 20, 40], Method::MonteCarlo { seed: 3, samples: 200_000 }, 0.2)
            .unwrap();
        // mu((f o T^0) g) = int of the tent over [0, 1) = 7/9
        assert!((rep.series.estimates[0] - 7.0 / 9.0).abs() <= rep.series.error_bounds[0]);
        assert!(rep.series.estimates[2] < 0.2);
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn ladder_csv_has_exact_and_float_rows() {
        let engine = TransferEngine::exact_lattice(rw_lab().map().clone()).unwrap();
        let g = LocalObservable::indicator(0.0, 1.0, false).unwrap();
        let mut ladder = engine.ladder(g.lattice_form().unwrap().clone()).unwrap();
        ladder.extend_to(2);
        let csv = ladder.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("n,cell,numerator,denominator,mass,error_bound")
        );
        assert!(csv.contains("2,0,1,3,")); // p_2(0) = 3/9 reduced to 1/3
    }

    #[test]
    fn llm_symmetric_walk_is_symmetric() {
        let lab = rw_lab();
        let cell = LocalObservable::indicator(0.0, 1.0, false).unwrap();
        let engine = TransferEngine::exact_lattice(lab.map().clone()).unwrap();
        let m = engine
            .apply_lattice(cell.lattice_form().unwrap(), 9)
            .unwrap();
        for j in 0..=9i64 {
            assert_eq!(m.mass(j), m.mass(-j), "p_9({j}) vs p_9({})", -j);
        }
    }

    #[test]
    fn coalescence_trivial_cases() {
        let lab = rw_lab();
        let sign = GlobalObservable::sign();
        let g = LocalObservable::indicator(0.0, 1.0, false).unwrap();
        let ns: Vec<usize> = (0..=10).collect();
        let rep = lab
            .coalescence_test(&sign, &g, &g, &ns, Method::ExactLattice, 1e-9)
            .unwrap();
        assert!(rep.delta.iter().all(|d| *d == 0.0));
        assert_eq!(rep.bound_holds, Some(true));

        let one = GlobalObservable::one();
        let h = LocalObservable::indicator(5.0, 6.0, false).unwrap();
        let rep = lab
            .coalescence_test(&one, &g, &h, &ns, Method::ExactLattice, 1e-9)
            .unwrap();
        assert!(rep.delta.iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn coalescence_dominated_by_lin_bound() {
        let lab = rw_lab();
        let sign = GlobalObservable::sign();
        let g = LocalObservable::indicator(0.0, 1.0, false).unwrap();
        let h = LocalObservable::indicator(5.0, 6.0, false).unwrap();
        let ns: Vec<usize> = (0..=80).collect();
        let rep = lab
            .coalescence_test(&sign, &g, &h, &ns, Method::ExactLattice, 0.5)
            .unwrap();
        let bound = rep.bound.as_ref().unwrap();
        for i in 0..ns.len() {
            assert!(rep.delta[i] <= bound[i] + 1e-12);
        }
        assert_eq!(rep.bound_holds, Some(true));
        assert!(bound.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn zero_mean_densities_rejected_for_coalescence() {
        let lab = rw_lab();
        let sign = GlobalObservable::sign();
        let dipole = LocalObservable::dipole(0, 1).unwrap();
        let g = LocalObservable::indicator(0.0, 1.0, false).unwrap();
        assert!(matches!(
            lab.coalescence_test(&sign, &dipole, &g, &[0, 1], Method::ExactLattice, 0.1),
            Err(Error::ZeroMean { .. })
        ));
    }

    #[test]
    fn rho_of_half_cell_is_one_half() {
        let lab = rw_lab();
        let f = GlobalObservable::half_cell(1).unwrap();
        let gs = vec![
            LocalObservable::indicator(0.0, 1.0, false).unwrap(),
            LocalObservable::indicator(5.0, 6.0, false).unwrap(),
        ];
        let ns: Vec<usize> = (0..=30).collect();
        let est = lab
            .estimate_rho(&f, &gs, &ns, Method::ExactLattice, 1.0 / 3.0)
            .unwrap();
        assert!((est.rho_hat - 0.5).abs() < 1e-12, "rho {}", est.rho_hat);
        assert!(est.coalescence_defect < 1e-12);
    }

    #[test]
    fn rho_is_shift_covariant() {
        let lab = rw_lab();
        let f = GlobalObservable::lattice_step(
            StepFn {
                offset: 0,
                values: vec![1.25],
                left_tail: 0.25,
                right_tail: 0.25,
            },
            "s".into(),
        );
        let shifted = GlobalObservable::combination(vec![
            (1.0, f.clone()),
            (2.5, GlobalObservable::one()),
        ]);
        let gs = vec![LocalObservable::indicator(0.0, 1.0, false).unwrap()];
        let ns: Vec<usize> = (0..=40).step_by(4).collect();
        let a = lab
            .estimate_rho(&f, &gs, &ns, Method::ExactLattice, 1.0 / 3.0)
            .unwrap();
        let b = lab
            .estimate_rho(&shifted, &gs, &ns, Method::ExactLattice, 1.0 / 3.0)
            .unwrap();
        assert!((b.rho_hat - a.rho_hat - 2.5).abs() < 1e-12);
    }

    #[test]
    fn boole_rho_of_sign_vanishes() {
        let lab = boole_lab();
        let sign = GlobalObservable::sign();
        let gs = vec![
            LocalObservable::indicator(-1.0, 1.0, true).unwrap(),
            LocalObservable::indicator(-2.0, 2.0, true).unwrap(),
        ];
        let ns: Vec<usize> = (0..=8).collect();
        let est = lab
            .estimate_rho(&sign, &gs, &ns, Method::Quadrature, 1.0 / 3.0)
            .unwrap();
        assert!(est.rho_hat.abs() < 1e-8, "rho {}", est.rho_hat);
        assert!(est.coalescence_defect < 1e-8);
    }

    #[test]
    fn ggm_grid_period_one_profiles() {
        let lab = rw_lab();
        let f = GlobalObservable::half_cell(1).unwrap();
        let fam = ExhaustiveFamily::cell_aligned(vec![0, 4, -4], vec![2.0, 4.0, 6.0, 8.0]);
        let ns: Vec<usize> = (0..=8).collect();
        let grid = lab.ggm_grid(&f, &f, &fam, &ns, 0.02).unwrap();
        assert!((grid.target - 0.25).abs() < 1e-9);
        // n = 0 column: mu_V(F^2) = 1/2 everywhere
        for row in &grid.entries {
            let (v, _) = row[0].unwrap();
            assert!((v - 0.5).abs() < 1e-9);
        }
        // corner deviations decrease toward the target
        assert!(
            grid.corner.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12),
            "{:?}",
            grid.corner
        );
        assert!(grid.corner.last().unwrap().1 < 0.02);
    }

    #[test]
    fn ladder_reuse_counts_hits() {
        let lab = rw_lab();
        let one = GlobalObservable::one();
        let g = LocalObservable::indicator(0.0, 1.0, false).unwrap();
        lab.correlate(&one, &g, &[0, 1, 2, 3], Method::ExactLattice).unwrap();
        assert_eq!(lab.ladder_hits(), 0);
        lab.correlate(&one, &g, &[2, 3], Method::ExactLattice).unwrap();
        assert_eq!(lab.ladder_hits(), 1);
    }
}
