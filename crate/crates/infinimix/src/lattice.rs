//! Finitely supported signed measures on the unit cells `[j, j+1)`.
//!
//! For a piecewise-linear random-walk map the transfer operator acts on
//! cell-step densities as a convolution with the jump law, so `P^n g` is
//! representable exactly: a vector of rationals over a shared denominator
//! (which grows like `k^n`). Beyond a configurable step the ladder switches
//! to an `f64` vector carrying a summed-roundoff bound.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ladder step at which exact rationals hand over to floats.
pub const RATIONAL_SWITCHOVER: usize = 300;

/// Signed measure on unit cells: cell `offset + i` carries mass
/// `numerators[i] / denominator`. The denominator is kept positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeMeasure {
    offset: i64,
    numerators: Vec<BigInt>,
    denominator: BigInt,
}

impl LatticeMeasure {
    pub fn new(offset: i64, numerators: Vec<BigInt>, denominator: BigInt) -> Self {
        assert!(denominator.is_positive(), "denominator must be positive");
        let mut m = LatticeMeasure {
            offset,
            numerators,
            denominator,
        };
        m.trim();
        m
    }

    /// Unit mass on a single cell.
    pub fn single_cell(j: i64) -> Self {
        LatticeMeasure::new(j, vec![BigInt::one()], BigInt::one())
    }

    /// Build from per-cell rational masses starting at `offset`.
    pub fn from_masses(offset: i64, masses: &[BigRational]) -> Self {
        let mut denom = BigInt::one();
        for m in masses {
            denom = denom.lcm(m.denom());
        }
        let numerators = masses
            .iter()
            .map(|m| m.numer() * (&denom / m.denom()))
            .collect();
        LatticeMeasure::new(offset, numerators, denom)
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    /// Mass of cell `j` as a reduced rational.
    pub fn mass(&self, j: i64) -> BigRational {
        let idx = j - self.offset;
        if idx < 0 || idx as usize >= self.numerators.len() {
            BigRational::zero()
        } else {
            BigRational::new(self.numerators[idx as usize].clone(), self.denominator.clone())
        }
    }

    pub fn mass_f64(&self, j: i64) -> f64 {
        self.mass(j).to_f64().unwrap_or(f64::NAN)
    }

    /// Iterate `(cell, mass)` over the stored support.
    pub fn cells(&self) -> impl Iterator<Item = (i64, BigRational)> + '_ {
        self.numerators.iter().enumerate().map(move |(i, n)| {
            (
                self.offset + i as i64,
                BigRational::new(n.clone(), self.denominator.clone()),
            )
        })
    }

    pub fn total_mass(&self) -> BigRational {
        let sum: BigInt = self.numerators.iter().sum();
        BigRational::new(sum, self.denominator.clone())
    }

    /// Total variation `sum |mass|`.
    pub fn total_variation(&self) -> BigRational {
        let sum: BigInt = self.numerators.iter().map(|n| n.abs()).sum();
        BigRational::new(sum, self.denominator.clone())
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let numerators = self.numerators.iter().map(|n| n * c.numer()).collect();
        LatticeMeasure::new(self.offset, numerators, &self.denominator * c.denom())
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        let offset = self.offset.min(other.offset);
        let end = (self.offset + self.len() as i64).max(other.offset + other.len() as i64);
        let denom = self.denominator.lcm(&other.denominator);
        let sa = &denom / &self.denominator;
        let sb = &denom / &other.denominator;
        let mut numerators = vec![BigInt::zero(); (end - offset) as usize];
        for (i, n) in self.numerators.iter().enumerate() {
            numerators[(self.offset - offset) as usize + i] += n * &sa;
        }
        for (i, n) in other.numerators.iter().enumerate() {
            numerators[(other.offset - offset) as usize + i] += n * &sb;
        }
        LatticeMeasure::new(offset, numerators, denom)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-BigRational::one()))
    }

    /// One transfer step: mass in cell `c` flows to `c + j` with
    /// probability `law(j)`, i.e. a convolution with the jump law.
    pub fn convolve(&self, law: &JumpLaw) -> Self {
        if self.is_empty() {
            return self.clone();
        }
        let span = law.numerators.len();
        let mut numerators = vec![BigInt::zero(); self.numerators.len() + span - 1];
        for (i, n) in self.numerators.iter().enumerate() {
            if n.is_zero() {
                continue;
            }
            for (j, q) in law.numerators.iter().enumerate() {
                if !q.is_zero() {
                    numerators[i + j] += n * q;
                }
            }
        }
        LatticeMeasure::new(
            self.offset + law.k1,
            numerators,
            &self.denominator * &law.denominator,
        )
    }

    /// Divide out the gcd of all numerators and the denominator.
    fn trim(&mut self) {
        // Drop zero edges first.
        while self.numerators.last().map_or(false, |n| n.is_zero()) {
            self.numerators.pop();
        }
        let leading = self
            .numerators
            .iter()
            .take_while(|n| n.is_zero())
            .count();
        if leading > 0 {
            self.numerators.drain(..leading);
            self.offset += leading as i64;
        }
        if self.numerators.is_empty() {
            self.denominator = BigInt::one();
            return;
        }
        let mut g = self.denominator.clone();
        for n in &self.numerators {
            g = g.gcd(n);
            if g.is_one() {
                return;
            }
        }
        for n in &mut self.numerators {
            *n /= &g;
        }
        self.denominator /= &g;
    }

    pub fn to_float(&self) -> FloatLattice {
        let masses: Vec<f64> = self
            .numerators
            .iter()
            .map(|n| BigRational::new(n.clone(), self.denominator.clone()).to_f64().unwrap_or(f64::NAN))
            .collect();
        // Each conversion rounds once.
        let sup = masses.iter().fold(0.0f64, |a, m| a.max(m.abs()));
        FloatLattice {
            offset: self.offset,
            masses,
            error: f64::EPSILON * sup,
        }
    }

    pub fn to_json(&self) -> LatticeMeasureJson {
        LatticeMeasureJson {
            offset: self.offset,
            numerators: self.numerators.iter().map(|n| n.to_string()).collect(),
            denominator: self.denominator.to_string(),
        }
    }

    pub fn from_json(j: &LatticeMeasureJson) -> Result<Self> {
        let parse = |s: &str| -> Result<BigInt> {
            s.parse()
                .map_err(|_| Error::Scenario(format!("bad integer literal {s:?}")))
        };
        let numerators = j
            .numerators
            .iter()
            .map(|s| parse(s))
            .collect::<Result<Vec<_>>>()?;
        let denominator = parse(&j.denominator)?;
        if !denominator.is_positive() {
            return Err(Error::Scenario("denominator must be positive".into()));
        }
        Ok(LatticeMeasure::new(j.offset, numerators, denominator))
    }
}

/// JSON form: decimal strings so arbitrary precision survives the trip.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeMeasureJson {
    pub offset: i64,
    pub numerators: Vec<String>,
    pub denominator: String,
}

/// Float-backed cell vector with a tracked absolute error bound per cell.
#[derive(Debug, Clone)]
pub struct FloatLattice {
    pub offset: i64,
    pub masses: Vec<f64>,
    /// Uniform per-cell absolute error bound.
    pub error: f64,
}

impl FloatLattice {
    pub fn mass(&self, j: i64) -> f64 {
        let idx = j - self.offset;
        if idx < 0 || idx as usize >= self.masses.len() {
            0.0
        } else {
            self.masses[idx as usize]
        }
    }

    pub fn convolve(&self, law: &[(i64, f64)]) -> FloatLattice {
        let k1 = law.iter().map(|(j, _)| *j).min().unwrap_or(0);
        let k2m1 = law.iter().map(|(j, _)| *j).max().unwrap_or(0);
        let span = (k2m1 - k1) as usize + 1;
        let mut masses = vec![0.0f64; self.masses.len() + span - 1];
        for (i, &m) in self.masses.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for &(j, p) in law {
                masses[i + (j - k1) as usize] += m * p;
            }
        }
        let sup = masses.iter().fold(0.0f64, |a, m| a.max(m.abs()));
        // Convex combination keeps the inherited bound; each output cell
        // accumulates `span + 1` roundings of magnitude <= sup.
        let error = self.error + (span as f64 + 1.0) * f64::EPSILON * sup;
        FloatLattice {
            offset: self.offset + k1,
            masses,
            error,
        }
    }

    pub fn total_variation(&self) -> (f64, f64) {
        let tv: f64 = self.masses.iter().map(|m| m.abs()).sum();
        (tv, self.error * self.masses.len() as f64)
    }
}

/// Jump distribution of a random-walk map: jump `k1 + i` has probability
/// `numerators[i] / denominator`, exact rationals summing to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JumpLaw {
    pub k1: i64,
    numerators: Vec<BigInt>,
    denominator: BigInt,
}

impl JumpLaw {
    pub fn new(k1: i64, probs: &[BigRational]) -> Result<Self> {
        let sum: BigRational = probs.iter().sum();
        if !sum.is_one() {
            return Err(Error::Construction(format!(
                "jump law must sum to 1 exactly, got {sum}"
            )));
        }
        let mut denom = BigInt::one();
        for p in probs {
            denom = denom.lcm(p.denom());
        }
        let numerators = probs.iter().map(|p| p.numer() * (&denom / p.denom())).collect();
        Ok(JumpLaw {
            k1,
            numerators,
            denominator: denom,
        })
    }

    /// Uniform law on jumps `k1, k1+1, ..., k2-1`.
    pub fn uniform(k1: i64, k2: i64) -> Result<Self> {
        if k2 - k1 < 2 {
            return Err(Error::Construction(format!(
                "need k2 - k1 >= 2 for an expanding map, got k1={k1}, k2={k2}"
            )));
        }
        let k = k2 - k1;
        let probs: Vec<BigRational> =
            (0..k).map(|_| BigRational::new(BigInt::one(), BigInt::from(k))).collect();
        JumpLaw::new(k1, &probs)
    }

    pub fn k2(&self) -> i64 {
        self.k1 + self.numerators.len() as i64
    }

    pub fn probability(&self, jump: i64) -> BigRational {
        let idx = jump - self.k1;
        if idx < 0 || idx as usize >= self.numerators.len() {
            BigRational::zero()
        } else {
            BigRational::new(self.numerators[idx as usize].clone(), self.denominator.clone())
        }
    }

    pub fn jumps(&self) -> impl Iterator<Item = (i64, BigRational)> + '_ {
        self.numerators.iter().enumerate().map(move |(i, n)| {
            (
                self.k1 + i as i64,
                BigRational::new(n.clone(), self.denominator.clone()),
            )
        })
    }

    pub fn as_floats(&self) -> Vec<(i64, f64)> {
        self.jumps()
            .map(|(j, p)| (j, p.to_f64().unwrap()))
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.numerators.len();
        (0..n).all(|i| {
            self.probability(self.k1 + i as i64) == self.probability(-(self.k1 + i as i64))
        })
    }


}

/// One rung of a transfer ladder.
#[derive(Debug, Clone)]
pub enum LadderEntry {
    Exact(LatticeMeasure),
    Float(FloatLattice),
}

impl LadderEntry {
    pub fn mass_with_bound(&self, j: i64) -> (f64, f64) {
        match self {
            LadderEntry::Exact(m) => (m.mass_f64(j), 0.0),
            LadderEntry::Float(f) => (f.mass(j), f.error),
        }
    }

    pub fn total_variation(&self) -> (f64, f64) {
        match self {
            LadderEntry::Exact(m) => (m.total_variation().to_f64().unwrap(), 0.0),
            LadderEntry::Float(f) => f.total_variation(),
        }
    }
}

/// The sequence `g, Pg, P^2 g, ...` for a random-walk map, exact up to the
/// switchover step and float-with-bound beyond.
#[derive(Debug, Clone)]
pub struct TransferLadder {
    law: JumpLaw,
    law_float: Vec<(i64, f64)>,
    switchover: usize,
    entries: Vec<LadderEntry>,
}

impl TransferLadder {
    pub fn new(g: LatticeMeasure, law: JumpLaw) -> Self {
        let law_float = law.as_floats();
        TransferLadder {
            law,
            law_float,
            switchover: RATIONAL_SWITCHOVER,
            entries: vec![LadderEntry::Exact(g)],
        }
    }

    pub fn with_switchover(mut self, n: usize) -> Self {
        self.switchover = n;
        self
    }

    pub fn law(&self) -> &JumpLaw {
        &self.law
    }

    pub fn max_step(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn extend_to(&mut self, n: usize) {
        while self.entries.len() <= n {
            let step = self.entries.len();
            let next = match self.entries.last().unwrap() {
                LadderEntry::Exact(m) => {
                    if step <= self.switchover {
                        LadderEntry::Exact(m.convolve(&self.law))
                    } else {
                        LadderEntry::Float(m.to_float().convolve(&self.law_float))
                    }
                }
                LadderEntry::Float(f) => LadderEntry::Float(f.convolve(&self.law_float)),
            };
            self.entries.push(next);
        }
    }

    pub fn entry(&mut self, n: usize) -> &LadderEntry {
        self.extend_to(n);
        &self.entries[n]
    }

    pub fn entry_if_built(&self, n: usize) -> Option<&LadderEntry> {
        self.entries.get(n)
    }

    pub fn entries(&self) -> &[LadderEntry] {
        &self.entries
    }

    pub fn switchover(&self) -> usize {
        self.switchover
    }

    /// Rebuild a ladder from persisted rungs (`entries[0]` is `g` itself).
    pub fn from_entries(law: JumpLaw, entries: Vec<LadderEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Precondition("a ladder needs at least the base entry".into()));
        }
        let law_float = law.as_floats();
        Ok(TransferLadder {
            law,
            law_float,
            switchover: RATIONAL_SWITCHOVER,
            entries,
        })
    }

    /// CSV rendering of the built rungs: exact rows carry numerator and
    /// denominator, float rows carry the mass and its error bound.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,cell,numerator,denominator,mass,error_bound\n");
        for (n, entry) in self.entries.iter().enumerate() {
            match entry {
                LadderEntry::Exact(m) => {
                    for (cell, mass) in m.cells() {
                        out.push_str(&format!(
                            "{n},{cell},{},{},{},0\n",
                            mass.numer(),
                            mass.denom(),
                            mass.to_f64().unwrap_or(f64::NAN),
                        ));
                    }
                }
                LadderEntry::Float(f) => {
                    for (i, &mass) in f.masses.iter().enumerate() {
                        out.push_str(&format!(
                            "{n},{},,,{mass},{}\n",
                            f.offset + i as i64,
                            f.error
                        ));
                    }
                }
            }
        }
        out
    }
}
