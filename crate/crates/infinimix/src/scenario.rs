//! Config-driven experiment runner.
//!
//! Scenarios are TOML documents with `[map]`, `[observables]`, `[family]`
//! and `[run]` sections; unknown keys are rejected outright (scenarios are
//! the test corpus, and a silent typo would fake a pass). Every run writes
//! a JSON artifact echoing the normalized config plus a CSV of the series,
//! and reruns with the same config, seed and library version produce
//! byte-identical result payloads.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{FloatLattice, JumpLaw, LadderEntry, LatticeMeasure, TransferLadder};
use crate::maps::PiecewiseMap;
use crate::mixing::{glm3_dictionary, Method, MixingLab, Verdict};
use crate::observables::{GlobalObservable, LocalObservable};
use crate::transfer::TransferEngine;
use crate::volume::{
    avol_check, estimate_avg, ExhaustiveFamily, FamilyKind, IvVerdict, Probe, DEFAULT_AVG_TOL,
};

/// Experiments the runner can dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Corr,
    Glm,
    Llm,
    Ggm,
    Coalescence,
    Rho,
    Avg,
    Avol,
    Lin,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Corr => "corr",
            Experiment::Glm => "glm",
            Experiment::Llm => "llm",
            Experiment::Ggm => "ggm",
            Experiment::Coalescence => "coalescence",
            Experiment::Rho => "rho",
            Experiment::Avg => "avg",
            Experiment::Avol => "avol",
            Experiment::Lin => "lin",
        }
    }
}

/// Range spec for the time grid: either an explicit list or
/// `"start..stop"` / `"start..stop..step"` (inclusive ends).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NSpec {
    Range(String),
    List(Vec<usize>),
}

impl NSpec {
    pub fn resolve(&self) -> Result<Vec<usize>> {
        let out = match self {
            NSpec::List(v) => v.clone(),
            NSpec::Range(s) => {
                let parts: Vec<&str> = s.split("..").filter(|p| !p.is_empty()).collect();
                let parse = |t: &str| -> Result<usize> {
                    t.trim()
                        .trim_start_matches('=')
                        .parse()
                        .map_err(|_| Error::Scenario(format!("bad n range {s:?}")))
                };
                match parts.as_slice() {
                    [a, b] => {
                        let (a, b) = (parse(a)?, parse(b)?);
                        (a..=b).collect()
                    }
                    [a, b, step] => {
                        let (a, b, step) = (parse(a)?, parse(b)?, parse(step)?);
                        if step == 0 {
                            return Err(Error::Scenario("n step must be positive".into()));
                        }
                        (a..=b).step_by(step).collect()
                    }
                    _ => return Err(Error::Scenario(format!("bad n range {s:?}"))),
                }
            }
        };
        if out.is_empty() {
            return Err(Error::Scenario("empty n list".into()));
        }
        if out.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Scenario("n list must be strictly increasing".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    pub id: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservablesSection {
    /// global observable F
    #[serde(rename = "F", skip_serializing_if = "Option::is_none")]
    pub f_upper: Option<String>,
    /// second global observable G (global-global experiments)
    #[serde(rename = "G", skip_serializing_if = "Option::is_none")]
    pub g_upper: Option<String>,
    /// local observable g
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    /// bounded local observable f (local-local experiments)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    /// second local observable h (coalescence)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    /// density set (glm, rho); `["dictionary"]` expands to the built-in one
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_set: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    /// `symmetric`, `translated` or `cell_aligned`
    pub kind: String,
    /// probe centers: numbers, or the scale markers `"+M"` / `"-M"`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<String>>,
    pub ladder: Vec<f64>,
}

impl FamilySection {
    pub fn build(&self) -> Result<ExhaustiveFamily> {
        let probes = match &self.probes {
            None => vec![Probe::At(0.0)],
            Some(list) => list
                .iter()
                .map(|p| match p.trim() {
                    "+M" => Ok(Probe::PlusScale),
                    "-M" => Ok(Probe::MinusScale),
                    num => num
                        .parse::<f64>()
                        .map(Probe::At)
                        .map_err(|_| Error::Scenario(format!("bad probe {p:?}"))),
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let kind = match self.kind.as_str() {
            "symmetric" => FamilyKind::SymmetricIntervals,
            "translated" => FamilyKind::TranslatedIntervals,
            "cell_aligned" => FamilyKind::CellAligned,
            other => {
                return Err(Error::Scenario(format!(
                    "unknown family kind {other:?}; expected symmetric, translated or cell_aligned"
                )))
            }
        };
        let fam = ExhaustiveFamily {
            kind,
            probes,
            ladder: self.ladder.clone(),
        };
        fam.validate()?;
        Ok(fam)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub experiment: Experiment,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<NSpec>,
    /// `auto`, `exact`, `quadrature` or `mc`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_fraction: Option<f64>,
    /// known Avg(F); computed from the family when absent
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

/// A parsed, validated scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub map: MapSection,
    #[serde(default)]
    pub observables: ObservablesSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySection>,
    pub run: RunSection,
}

impl ScenarioConfig {
    /// Parse a scenario document; unknown keys are rejected with the toml
    /// error, which names the expected fields.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if let Some(t) = self.run.tolerance {
            if !(t > 0.0) {
                return Err(Error::Scenario(format!("tolerance must be positive, got {t}")));
            }
        }
        if let Some(tf) = self.run.tail_fraction {
            if !(0.0 < tf && tf <= 1.0) {
                return Err(Error::Scenario(format!(
                    "tail_fraction must lie in (0, 1], got {tf}"
                )));
            }
        }
        if let Some(n) = &self.run.n {
            n.resolve()?;
        }
        // Resolve every referenced id now so typos fail before any work.
        PiecewiseMap::from_id(&self.map.id)?;
        for gid in self.local_ids() {
            LocalObservable::from_id(&gid)?;
        }
        for fid in [&self.observables.f_upper, &self.observables.g_upper]
            .into_iter()
            .flatten()
        {
            GlobalObservable::from_id(fid)?;
        }
        if let Some(fam) = &self.family {
            fam.build()?;
        }
        Ok(())
    }

    fn local_ids(&self) -> Vec<String> {
        let mut out = Vec::new();
        for o in [&self.observables.g, &self.observables.f, &self.observables.h] {
            if let Some(id) = o {
                out.push(id.clone());
            }
        }
        if let Some(set) = &self.observables.g_set {
            for id in set {
                if id != "dictionary" {
                    out.push(id.clone());
                }
            }
        }
        out
    }

    /// The canonical text form; parsing it back yields the same config.
    pub fn normal_form(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn tolerance(&self) -> f64 {
        self.run.tolerance.unwrap_or(DEFAULT_AVG_TOL)
    }

    pub fn n_list(&self) -> Result<Vec<usize>> {
        match &self.run.n {
            Some(n) => n.resolve(),
            None => Ok((0..=40).collect()),
        }
    }

    pub fn method(&self) -> Result<Method> {
        let seed = self.run.seed.unwrap_or(0);
        let samples = self.run.samples.unwrap_or(crate::mixing::DEFAULT_MC_SAMPLES);
        match self.run.method.as_deref() {
            None | Some("auto") => Ok(Method::Auto),
            Some("exact") => Ok(Method::ExactLattice),
            Some("quadrature") => Ok(Method::Quadrature),
            Some("mc") => Ok(Method::MonteCarlo { seed, samples }),
            Some(other) => Err(Error::Scenario(format!(
                "unknown method {other:?}; expected auto, exact, quadrature or mc"
            ))),
        }
    }
}

/// One CSV row of a series file.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesRow {
    pub n: f64,
    pub estimate: f64,
    pub error_bound: f64,
    pub method: String,
}

/// Everything a run leaves behind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunArtifact {
    pub experiment: String,
    pub map: String,
    pub library_version: String,
    pub status: String,
    pub exit_code: i32,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub cache_hits: usize,
    pub config_echo: String,
    pub payload: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// ladder cache directory; `None` disables the cache
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out_dir: PathBuf::from("."),
            cache_dir: None,
        }
    }
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn verdict_status(v: Verdict) -> (&'static str, i32) {
    match v {
        Verdict::Pass => ("pass", 0),
        Verdict::Fail => ("fail", 2),
        Verdict::Inconclusive => ("inconclusive", 3),
    }
}

fn iv_status(v: IvVerdict) -> (&'static str, i32) {
    match v {
        IvVerdict::Converged => ("converged", 0),
        IvVerdict::NotUniform => ("not-uniform", 2),
        IvVerdict::Inconclusive => ("inconclusive", 3),
    }
}

/// Run a parsed scenario. Module errors are captured into the artifact
/// (status `error`, exit code 1) rather than tearing the run down.
pub fn run_scenario(config: &ScenarioConfig, name: &str, opts: &RunOptions) -> RunArtifact {
    let started = unix_ms();
    let outcome = execute(config, opts);
    let finished = unix_ms();
    let (status, exit_code, cache_hits, payload, series) = match outcome {
        Ok(r) => (r.status, r.exit_code, r.cache_hits, r.payload, r.series),
        Err(e) => (
            "error".to_string(),
            1,
            0,
            serde_json::json!({ "error": e.to_string() }),
            Vec::new(),
        ),
    };
    let artifact = RunArtifact {
        experiment: config.run.experiment.name().to_string(),
        map: config.map.id.clone(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        status,
        exit_code,
        started_unix_ms: started,
        finished_unix_ms: finished,
        cache_hits,
        config_echo: config.normal_form(),
        payload,
    };
    let _ = write_outputs(&artifact, &series, name, &opts.out_dir);
    artifact
}

fn write_outputs(
    artifact: &RunArtifact,
    series: &[(String, Vec<SeriesRow>)],
    name: &str,
    out_dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let json = serde_json::to_string_pretty(artifact)
        .map_err(|e| Error::Scenario(format!("artifact serialization: {e}")))?;
    std::fs::write(out_dir.join(format!("{name}.artifact.json")), json)?;
    let mut csv = String::from("n,estimate,error_bound,method\n");
    for (label, rows) in series {
        if series.len() > 1 {
            csv.push_str(&format!("# {label}\n"));
        }
        for r in rows {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                r.n, r.estimate, r.error_bound, r.method
            ));
        }
    }
    std::fs::write(out_dir.join(format!("{name}.series.csv")), csv)?;
    Ok(())
}

struct Outcome {
    status: String,
    exit_code: i32,
    cache_hits: usize,
    payload: serde_json::Value,
    series: Vec<(String, Vec<SeriesRow>)>,
}


fn series_rows(s: &crate::mixing::CorrelationSeries) -> Vec<SeriesRow> {
    let label = match s.method {
        crate::mixing::MethodUsed::ExactLattice => "exact".to_string(),
        crate::mixing::MethodUsed::Quadrature => "quadrature".to_string(),
        crate::mixing::MethodUsed::MonteCarlo { seed, samples } => {
            format!("mc[seed={seed},samples={samples}]")
        }
    };
    s.n_values
        .iter()
        .zip(s.estimates.iter().zip(&s.error_bounds))
        .map(|(&n, (&estimate, &error_bound))| SeriesRow {
            n: n as f64,
            estimate,
            error_bound,
            method: label.clone(),
        })
        .collect()
}

fn execute(config: &ScenarioConfig, opts: &RunOptions) -> Result<Outcome> {
    let map = PiecewiseMap::from_id(&config.map.id)?;
    let lab = MixingLab::new(map);
    let method = config.method()?;
    let tol = config.tolerance();
    let n_list = config.n_list()?;
    let tail_fraction = config.run.tail_fraction.unwrap_or(1.0 / 3.0);
    let need = |o: &Option<String>, what: &str| -> Result<String> {
        o.clone()
            .ok_or_else(|| Error::Scenario(format!("experiment needs observables.{what}")))
    };
    let obs = &config.observables;

    // Preload ladders from the on-disk cache for the exact route.
    let mut cache_hits = 0usize;
    let cache = opts.cache_dir.as_ref().map(|d| LadderCache::new(d.clone()));
    let mut cacheable: Vec<String> = Vec::new();
    if lab.map().jump_law().is_some() {
        for gid in config.local_ids() {
            let g = LocalObservable::from_id(&gid)?;
            if g.lattice_form().is_some() {
                cacheable.push(gid.clone());
                if let Some(c) = &cache {
                    if let Some(ladder) = c.load(&config.map.id, &gid, lab.map().jump_law().unwrap())? {
                        cache_hits += ladder.entries().len();
                        lab.install_ladder(gid, ladder);
                    }
                }
            }
        }
    }

    let mut out = match config.run.experiment {
        Experiment::Corr => {
            let f = GlobalObservable::from_id(&need(&obs.f_upper, "F")?)?;
            let g = LocalObservable::from_id(&need(&obs.g, "g")?)?;
            let s = lab.correlate(&f, &g, &n_list, method)?;
            Outcome {
                status: "completed".into(),
                exit_code: 0,
                cache_hits: 0,
                payload: serde_json::to_value(&s).unwrap(),
                series: vec![(g.id().to_string(), series_rows(&s))],
            }
        }
        Experiment::Lin => {
            let g = LocalObservable::from_id(&need(&obs.g, "g")?)?;
            let engine = if lab.map().jump_law().is_some() && g.lattice_form().is_some() {
                TransferEngine::exact_lattice(lab.map().clone())?
            } else {
                TransferEngine::preimage_sum(lab.map().clone())
            };
            let s = engine.lin_norm(&g, &n_list)?;
            let max_increase = s.max_increase();
            let verdict = if max_increase <= 1e-12 {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            let (status, exit_code) = verdict_status(verdict);
            let rows: Vec<SeriesRow> = s
                .n_values
                .iter()
                .zip(s.values.iter().zip(&s.error_bounds))
                .map(|(&n, (&v, &e))| SeriesRow {
                    n: n as f64,
                    estimate: v,
                    error_bound: e,
                    method: "lin".into(),
                })
                .collect();
            Outcome {
                status: status.into(),
                exit_code,
                cache_hits: 0,
                payload: serde_json::json!({
                    "n_values": s.n_values,
                    "values": s.values,
                    "error_bounds": s.error_bounds,
                    "max_increase": max_increase,
                    "truncation_flagged": s.truncation_flagged,
                    "verdict": verdict,
                }),
                series: vec![(g.id().to_string(), rows)],
            }
        }
        Experiment::Glm => {
            let f = GlobalObservable::from_id(&need(&obs.f_upper, "F")?)?;
            let g_set = resolve_g_set(obs)?;
            let avg_f = match config.run.avg {
                Some(a) => a,
                None => {
                    let fam = config
                        .family
                        .as_ref()
                        .ok_or_else(|| {
                            Error::Scenario(
                                "glm needs run.avg or a [family] to estimate Avg(F)".into(),
                            )
                        })?
                        .build()?;
                    let rep = estimate_avg(&f, &fam, tol)?;
                    if rep.verdict != IvVerdict::Converged {
                        return Err(Error::Precondition(format!(
                            "Avg(F) did not converge ({:?}); supply run.avg explicitly",
                            rep.verdict
                        )));
                    }
                    rep.estimate
                }
            };
            let rep = lab.glm_verdict(&f, &g_set, avg_f, &n_list, method, tol)?;
            let (status, exit_code) = verdict_status(rep.verdict);
            let series = rep
                .per_density
                .iter()
                .map(|e| (e.g_id.clone(), series_rows(&e.series)))
                .collect();
            Outcome {
                status: status.into(),
                exit_code,
                cache_hits: 0,
                payload: serde_json::to_value(&rep).unwrap(),
                series,
            }
        }
        Experiment::Llm => {
            let f = LocalObservable::from_id(&need(&obs.f, "f")?)?;
            let g = LocalObservable::from_id(&need(&obs.g, "g")?)?;
            let rep = lab.llm_verdict(&f, &g, &n_list, method, tol)?;
            let (status, exit_code) = verdict_status(rep.verdict);
            let series = vec![(format!("{}|{}", rep.f_id, rep.g_id), series_rows(&rep.series))];
            Outcome {
                status: status.into(),
                exit_code,
                cache_hits: 0,
                payload: serde_json::to_value(&rep).unwrap(),
                series,
            }
        }
        Experiment::Ggm => {
            let f = GlobalObservable::from_id(&need(&obs.f_upper, "F")?)?;
            let g = GlobalObservable::from_id(&need(&obs.g_upper, "G")?)?;
            let fam = config
                .family
                .as_ref()
                .ok_or_else(|| Error::Scenario("ggm needs a [family] section".into()))?
                .build()?;
            let grid = lab.ggm_grid(&f, &g, &fam, &n_list, tol)?;
            let (status, exit_code) = verdict_status(grid.verdict);
            let rows: Vec<SeriesRow> = grid
                .corner
                .iter()
                .map(|&(m, dev)| SeriesRow {
                    n: m,
                    estimate: dev,
                    error_bound: 0.0,
                    method: "corner-deviation".into(),
                })
                .collect();
            Outcome {
                status: status.into(),
                exit_code,
                cache_hits: 0,
                payload: serde_json::to_value(&grid).unwrap(),
                series: vec![("corner".into(), rows)],
            }
        }
        Experiment::Coalescence => {
            let f = GlobalObservable::from_id(&need(&obs.f_upper, "F")?)?;
            let g = LocalObservable::from_id(&need(&obs.g, "g")?)?;
            let h = LocalObservable::from_id(&need(&obs.h, "h")?)?;
            let rep = lab.coalescence_test(&f, &g, &h, &n_list, method, tol)?;
            let (status, exit_code) = verdict_status(rep.verdict);
            let rows: Vec<SeriesRow> = rep
                .n_values
                .iter()
                .enumerate()
                .map(|(i, &n)| SeriesRow {
                    n: n as f64,
                    estimate: rep.delta[i],
                    error_bound: rep.bound.as_ref().map(|b| b[i]).unwrap_or(f64::NAN),
                    method: "delta|bound".into(),
                })
                .collect();
            Outcome {
                status: status.into(),
                exit_code,
                cache_hits: 0,
                payload: serde_json::to_value(&rep).unwrap(),
                series: vec![("delta".into(), rows)],
            }
        }
        Experiment::Rho => {
            let f = GlobalObservable::from_id(&need(&obs.f_upper, "F")?)?;
            let g_set = resolve_g_set(obs)?;
            let est = lab.estimate_rho(&f, &g_set, &n_list, method, tail_fraction)?;
            let max_err = est
                .per_density
                .iter()
                .map(|d| d.tail_max_err)
                .fold(0.0f64, f64::max);
            let verdict = {
                let dev = est.coalescence_defect;
                if dev <= tol && max_err <= 0.5 * tol {
                    Verdict::Pass
                } else if max_err > 0.5 * tol {
                    Verdict::Inconclusive
                } else {
                    Verdict::Fail
                }
            };
            let (status, exit_code) = verdict_status(verdict);
            let series = est
                .per_density
                .iter()
                .zip(&est.series)
                .map(|(d, s)| (d.g_id.clone(), series_rows(s)))
                .collect();
            Outcome {
                status: status.into(),
                exit_code,
                cache_hits: 0,
                payload: serde_json::to_value(&est).unwrap(),
                series,
            }
        }
        Experiment::Avg => {
            let f = GlobalObservable::from_id(&need(&obs.f_upper, "F")?)?;
            let fam = config
                .family
                .as_ref()
                .ok_or_else(|| Error::Scenario("avg needs a [family] section".into()))?
                .build()?;
            let rep = estimate_avg(&f, &fam, tol)?;
            let (status, exit_code) = iv_status(rep.verdict);
            let rows: Vec<SeriesRow> = rep
                .ladder
                .iter()
                .map(|p| SeriesRow {
                    n: p.m,
                    estimate: rep.estimate,
                    error_bound: p.defect,
                    method: "window-average".into(),
                })
                .collect();
            Outcome {
                status: status.into(),
                exit_code,
                cache_hits: 0,
                payload: serde_json::to_value(&rep).unwrap(),
                series: vec![("defect".into(), rows)],
            }
        }
        Experiment::Avol => {
            let fam = config
                .family
                .as_ref()
                .ok_or_else(|| Error::Scenario("avol needs a [family] section".into()))?
                .build()?;
            let n = *n_list.last().unwrap();
            let series = avol_check(lab.map(), &fam, n)?;
            let decreasing = series.windows(2).all(|w| w[1].1 <= w[0].1);
            let last = series.last().map(|(_, r)| *r).unwrap_or(f64::NAN);
            let verdict = if decreasing && last <= tol {
                Verdict::Pass
            } else if decreasing {
                Verdict::Inconclusive
            } else {
                Verdict::Fail
            };
            let (status, exit_code) = verdict_status(verdict);
            let rows: Vec<SeriesRow> = series
                .iter()
                .map(|&(m, ratio)| SeriesRow {
                    n: m,
                    estimate: ratio,
                    error_bound: 0.0,
                    method: "exact-interval".into(),
                })
                .collect();
            Outcome {
                status: status.into(),
                exit_code,
                cache_hits: 0,
                payload: serde_json::json!({
                    "n": n,
                    "series": series,
                    "verdict": verdict,
                }),
                series: vec![("avol".into(), rows)],
            }
        }
    };

    // Persist extended ladders back to the cache.
    if let Some(c) = &cache {
        for gid in &cacheable {
            if let Some(ladder) = lab.export_ladder(gid) {
                c.store(&config.map.id, gid, &ladder)?;
            }
        }
    }
    out.cache_hits = cache_hits + lab.ladder_hits();
    Ok(out)
}

fn resolve_g_set(obs: &ObservablesSection) -> Result<Vec<LocalObservable>> {
    let ids = obs
        .g_set
        .clone()
        .or_else(|| obs.g.clone().map(|g| vec![g]))
        .ok_or_else(|| Error::Scenario("experiment needs observables.g_set (or g)".into()))?;
    let mut out = Vec::new();
    for id in ids {
        if id == "dictionary" {
            out.extend(glm3_dictionary());
        } else {
            out.push(LocalObservable::from_id(&id)?);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Ladder cache: text files with exact rationals as decimal strings,
// float rungs as bit-exact hex, and a trailing checksum line.
// ---------------------------------------------------------------------

pub struct LadderCache {
    dir: PathBuf,
}

/// Outcome of an explicit ladder-cache build request.
#[derive(Debug, Clone, Serialize)]
pub struct CacheHandle {
    pub path: PathBuf,
    pub max_step: usize,
    pub entries_loaded: usize,
}

impl LadderCache {
    pub fn new(dir: PathBuf) -> Self {
        LadderCache { dir }
    }

    /// Cache location: explicit override, `INFINIMIX_CACHE_DIR`, or a
    /// dot-directory under the working directory.
    pub fn default_dir() -> PathBuf {
        std::env::var_os("INFINIMIX_CACHE_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(".infinimix-cache"))
    }

    fn path_for(&self, map_id: &str, g_id: &str) -> PathBuf {
        let sanitize = |s: &str| s.replace([':', '/', '\\'], "_");
        self.dir
            .join(format!("{}__{}.ladder", sanitize(map_id), sanitize(g_id)))
    }

    /// Load a ladder; corrupt files are detected by checksum and ignored
    /// (the caller rebuilds).
    pub fn load(&self, map_id: &str, g_id: &str, law: &JumpLaw) -> Result<Option<TransferLadder>> {
        let path = self.path_for(map_id, g_id);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(_) => return Ok(None),
        };
        match parse_ladder_file(&text, law) {
            Ok(ladder) => Ok(Some(ladder)),
            Err(Error::CacheCorrupt(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn store(&self, map_id: &str, g_id: &str, ladder: &TransferLadder) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.dir)?;
        let path = self.path_for(map_id, g_id);
        let body = render_ladder_file(map_id, g_id, ladder);
        std::fs::write(&path, body)?;
        Ok(path)
    }
}

/// Build (or extend) the persisted ladder for `(map, g)` up to `n_max`.
pub fn cache_lattice_ladder(
    map: &PiecewiseMap,
    g: &LocalObservable,
    n_max: usize,
    dir: &Path,
) -> Result<CacheHandle> {
    let law = map.jump_law().ok_or(Error::MethodMismatch {
        method: "exact-lattice",
        reason: format!("map {} carries no lattice jump law", map.id()),
    })?;
    let m = g.lattice_form().ok_or(Error::MethodMismatch {
        method: "exact-lattice",
        reason: format!("{} has no lattice form", g.id()),
    })?;
    let cache = LadderCache::new(dir.to_path_buf());
    let (mut ladder, loaded) = match cache.load(map.id(), g.id(), law)? {
        Some(l) => {
            let n = l.entries().len();
            (l, n)
        }
        None => (TransferLadder::new(m.clone(), law.clone()), 0),
    };
    ladder.extend_to(n_max);
    let path = cache.store(map.id(), g.id(), &ladder)?;
    Ok(CacheHandle {
        path,
        max_step: ladder.max_step(),
        entries_loaded: loaded,
    })
}

fn render_ladder_file(map_id: &str, g_id: &str, ladder: &TransferLadder) -> String {
    let mut body = String::new();
    body.push_str("infinimix-ladder v1\n");
    body.push_str(&format!("map {map_id}\n"));
    body.push_str(&format!("g {g_id}\n"));
    body.push_str(&format!("entries {}\n", ladder.entries().len()));
    for (n, entry) in ladder.entries().iter().enumerate() {
        match entry {
            LadderEntry::Exact(m) => {
                let j = m.to_json();
                body.push_str(&format!("entry {n} exact {}\n", j.offset));
                body.push_str(&format!("denom {}\n", j.denominator));
                body.push_str(&format!("numer {}\n", j.numerators.join(",")));
            }
            LadderEntry::Float(f) => {
                body.push_str(&format!(
                    "entry {n} float {} {:016x}\n",
                    f.offset,
                    f.error.to_bits()
                ));
                let masses: Vec<String> =
                    f.masses.iter().map(|m| format!("{:016x}", m.to_bits())).collect();
                body.push_str(&format!("masses {}\n", masses.join(",")));
            }
        }
    }
    let digest = Sha256::digest(body.as_bytes());
    body.push_str(&format!("checksum {digest:x}\n"));
    body
}

fn parse_ladder_file(text: &str, law: &JumpLaw) -> Result<TransferLadder> {
    let corrupt = |why: &str| Error::CacheCorrupt(why.to_string());
    let (body, checksum_line) = text
        .rsplit_once("checksum ")
        .ok_or_else(|| corrupt("missing checksum"))?;
    let stored = checksum_line.trim();
    let digest = format!("{:x}", Sha256::digest(body.as_bytes()));
    if digest != stored {
        return Err(corrupt("checksum mismatch"));
    }
    let mut lines = body.lines();
    if lines.next() != Some("infinimix-ladder v1") {
        return Err(corrupt("bad header"));
    }
    let _map = lines.next().ok_or_else(|| corrupt("truncated"))?;
    let _g = lines.next().ok_or_else(|| corrupt("truncated"))?;
    let count: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("entries "))
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| corrupt("bad entry count"))?;
    let mut entries = Vec::with_capacity(count);
    for n in 0..count {
        let head = lines.next().ok_or_else(|| corrupt("truncated entry"))?;
        let parts: Vec<&str> = head.split_whitespace().collect();
        match parts.as_slice() {
            ["entry", idx, "exact", offset] => {
                if idx.parse::<usize>().ok() != Some(n) {
                    return Err(corrupt("entry index out of order"));
                }
                let offset: i64 = offset.parse().map_err(|_| corrupt("bad offset"))?;
                let denom = lines
                    .next()
                    .and_then(|l| l.strip_prefix("denom "))
                    .ok_or_else(|| corrupt("missing denom"))?;
                let numer = lines
                    .next()
                    .and_then(|l| l.strip_prefix("numer "))
                    .ok_or_else(|| corrupt("missing numer"))?;
                let denominator: BigInt =
                    denom.trim().parse().map_err(|_| corrupt("bad denom"))?;
                let numerators: Vec<BigInt> = numer
                    .split(',')
                    .map(|t| t.trim().parse().map_err(|_| corrupt("bad numerator")))
                    .collect::<Result<_>>()?;
                entries.push(LadderEntry::Exact(LatticeMeasure::new(
                    offset,
                    numerators,
                    denominator,
                )));
            }
            ["entry", idx, "float", offset, err_hex] => {
                if idx.parse::<usize>().ok() != Some(n) {
                    return Err(corrupt("entry index out of order"));
                }
                let offset: i64 = offset.parse().map_err(|_| corrupt("bad offset"))?;
                let error = u64::from_str_radix(err_hex, 16)
                    .map(f64::from_bits)
                    .map_err(|_| corrupt("bad error bits"))?;
                let masses_line = lines
                    .next()
                    .and_then(|l| l.strip_prefix("masses "))
                    .ok_or_else(|| corrupt("missing masses"))?;
                let masses: Vec<f64> = masses_line
                    .split(',')
                    .map(|t| {
                        u64::from_str_radix(t.trim(), 16)
                            .map(f64::from_bits)
                            .map_err(|_| corrupt("bad mass bits"))
                    })
                    .collect::<Result<_>>()?;
                entries.push(LadderEntry::Float(FloatLattice {
                    offset,
                    masses,
                    error,
                }));
            }
            _ => return Err(corrupt("bad entry header")),
        }
    }
    TransferLadder::from_entries(law.clone(), entries)
}

// ---------------------------------------------------------------------
// Bundled scenario corpus.
// ---------------------------------------------------------------------

/// Scenario files shipped with the binary; `run` accepts these names as
/// well as filesystem paths.
pub fn bundled_scenarios() -> Vec<(&'static str, &'static str)> {
    vec![
        ("ac-01", include_str!("../scenarios/ac-01.toml")),
        ("ac-02", include_str!("../scenarios/ac-02.toml")),
        ("ac-03", include_str!("../scenarios/ac-03.toml")),
        ("ac-04", include_str!("../scenarios/ac-04.toml")),
        ("ac-05", include_str!("../scenarios/ac-05.toml")),
        ("ac-06", include_str!("../scenarios/ac-06.toml")),
        ("ac-07", include_str!("../scenarios/ac-07.toml")),
        ("ac-08", include_str!("../scenarios/ac-08.toml")),
        ("ac-09", include_str!("../scenarios/ac-09.toml")),
        ("ac-10", include_str!("../scenarios/ac-10.toml")),
        ("ac-11", include_str!("../scenarios/ac-11.toml")),
        ("boole-sign", include_str!("../scenarios/boole-sign.toml")),
        ("rw-lin", include_str!("../scenarios/rw-lin.toml")),
    ]
}

/// Resolve a `run` argument: a filesystem path, or a bundled name.
pub fn load_scenario(arg: &str) -> Result<(String, String)> {
    let path = Path::new(arg);
    if path.exists() {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("scenario")
            .to_string();
        return Ok((name, std::fs::read_to_string(path)?));
    }
    for (name, text) in bundled_scenarios() {
        if name == arg {
            return Ok((name.to_string(), text.to_string()));
        }
    }
    Err(Error::UnknownId {
        id: arg.to_string(),
        candidates: bundled_scenarios()
            .iter()
            .map(|(n, _)| n.to_string())
            .take(5)
            .collect(),
    })
}
