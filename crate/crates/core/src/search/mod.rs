//! Minimizing `|A + λ·A|` over m-subsets of Z/pZ.

mod combinations;
mod sweep;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use combinations::{advance, binomial, unrank};
pub use sweep::{sweep, MRule, MemoryCache, ResultCache, SweepCell, SweepConfig, SweepOutcome};

use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use crate::rational::{ratio, Rational};
use crate::zp_core::{canonical_form, dilate_sum, require_prime, Kernel, ResidueSet};

/// Default bound on the number of candidate subsets the exact search may visit.
pub const DEFAULT_EXACT_CAP: u128 = 100_000_000;
/// Starting temperature multiplier and cooling factor of the annealer.
pub const COOLING: f64 = 0.999;

const EXACT_CHUNKS: u128 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Heuristic,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Heuristic => "heuristic",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "heuristic" => Ok(Mode::Heuristic),
            _ => Err(Error::Parse(format!("unknown search mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SearchTask {
    pub p: u64,
    pub lambda: i64,
    pub m: u64,
    pub mode: Mode,
    /// Heuristic only.
    pub seed: u64,
    /// Heuristic iteration count.
    pub budget: u64,
}

impl SearchTask {
    pub fn exact(p: u64, lambda: i64, m: u64) -> Self {
        SearchTask {
            p,
            lambda,
            m,
            mode: Mode::Exact,
            seed: 0,
            budget: 0,
        }
    }

    pub fn heuristic(p: u64, lambda: i64, m: u64, seed: u64, budget: u64) -> Self {
        SearchTask {
            p,
            lambda,
            m,
            mode: Mode::Heuristic,
            seed,
            budget,
        }
    }

    /// Seed and budget only enter the encoding in heuristic mode.
    pub fn canonical_encoding(&self) -> String {
        match self.mode {
            Mode::Exact => format!("search/1;p={};lambda={};m={};mode=exact", self.p, self.lambda, self.m),
            Mode::Heuristic => format!(
                "search/1;p={};lambda={};m={};mode=heuristic;seed={};budget={}",
                self.p, self.lambda, self.m, self.seed, self.budget
            ),
        }
    }

    pub fn digest(&self) -> String {
        sha256_hex(&self.canonical_encoding())
    }

    fn validate(&self) -> Result<usize> {
        let n = usize::try_from(self.p).map_err(|_| Error::Overflow("modulus"))?;
        require_prime(n)?;
        if self.m == 0 || self.m > self.p {
            return Err(Error::invalid(format!("need 1 <= m <= p, got m = {} for p = {}", self.m, self.p)));
        }
        Ok(n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub task: SearchTask,
    pub task_digest: String,
    pub min_size: u64,
    /// Canonical representative of an optimal affine class.
    pub witness: ResidueSet,
    /// Canonical classes visited (exact) or sets evaluated (heuristic).
    pub classes_enumerated: u64,
    pub exact: bool,
}

impl SearchResult {
    pub fn alpha(&self) -> Rational {
        ratio(BigInt::from(self.task.m), BigInt::from(self.task.p))
    }

    pub fn min_over_p(&self) -> Rational {
        ratio(BigInt::from(self.min_size), BigInt::from(self.task.p))
    }
}

fn dilate_sum_size(a: &ResidueSet, lambda: i64) -> u64 {
    dilate_sum(a, lambda, Kernel::Bitshift).len() as u64
}

/// Runs the task in its own mode.
pub fn run(task: &SearchTask) -> Result<SearchResult> {
    match task.mode {
        Mode::Exact => exact_min_dilate_sumset(task),
        Mode::Heuristic => heuristic_min_dilate_sumset(task),
    }
}

pub fn exact_min_dilate_sumset(task: &SearchTask) -> Result<SearchResult> {
    exact_min_dilate_sumset_capped(task, DEFAULT_EXACT_CAP)
}

/// Exhaustive minimum over canonical affine classes.
///
/// For `m ≥ 2` every canonical representative contains `{0, 1}`, so only
/// those `C(p−2, m−2)` subsets are visited and each is kept iff it equals its
/// canonical form. Ties go to the least witness.
pub fn exact_min_dilate_sumset_capped(task: &SearchTask, cap: u128) -> Result<SearchResult> {
    if task.mode != Mode::Exact {
        return Err(Error::invalid("exact search needs mode = exact"));
    }
    let n = task.validate()?;
    let finish = |min_size, witness, classes_enumerated| SearchResult {
        task: task.clone(),
        task_digest: task.digest(),
        min_size,
        witness,
        classes_enumerated,
        exact: true,
    };
    if task.m == 1 || task.m == task.p {
        let witness = canonical_form(&ResidueSet::from_integers(n, 0..task.m as i64))?;
        let size = dilate_sum_size(&witness, task.lambda);
        return Ok(finish(size, witness, 1));
    }
    let free = task.p - 2;
    let r = task.m - 2;
    let candidates = binomial(free, r);
    if candidates > cap {
        return Err(Error::ScaleCap {
            what: "exact search candidates (use heuristic mode)".into(),
            size: candidates,
            cap,
        });
    }
    let chunk = candidates.div_ceil(EXACT_CHUNKS).max(1);
    let chunks = candidates.div_ceil(chunk);
    let best = (0..chunks as u64)
        .into_par_iter()
        .map(|i| {
            let start = i as u128 * chunk;
            let count = chunk.min(candidates - start);
            let mut combo = unrank(free, r, start);
            let mut local: Option<(u64, ResidueSet)> = None;
            let mut classes = 0u64;
            for step in 0..count {
                let mut a = ResidueSet::empty(n);
                a.insert(0);
                a.insert(1);
                for &x in &combo {
                    a.insert(x as usize + 2);
                }
                if canonical_form(&a).expect("prime modulus") == a {
                    classes += 1;
                    let size = dilate_sum_size(&a, task.lambda);
                    if local.as_ref().is_none_or(|(s, w)| (size, &a) < (*s, w)) {
                        local = Some((size, a));
                    }
                }
                if step + 1 < count {
                    advance(&mut combo, free);
                }
            }
            (local, classes)
        })
        .reduce(
            || (None, 0),
            |(a, ca), (b, cb)| {
                let best = match (a, b) {
                    (Some(a), Some(b)) => Some(if b < a { b } else { a }),
                    (a, b) => a.or(b),
                };
                (best, ca + cb)
            },
        );
    let (Some((size, witness)), classes) = best else {
        unreachable!("every orbit has a canonical member containing 0 and 1");
    };
    Ok(finish(size, witness, classes))
}

/// Reference enumerator over all `C(p, m)` subsets with no symmetry pruning.
/// Returns the minimum and the least canonical form among optimal subsets.
pub fn reference_min_dilate_sumset(p: u64, lambda: i64, m: u64) -> Result<(u64, ResidueSet)> {
    let n = SearchTask::exact(p, lambda, m).validate()?;
    let mut combo = unrank(p, m, 0);
    let mut best: Option<(u64, ResidueSet)> = None;
    loop {
        let a = ResidueSet::from_elements(n, combo.iter().copied())?;
        let size = dilate_sum_size(&a, lambda);
        if best.as_ref().is_none_or(|(s, _)| size <= *s) {
            let canon = canonical_form(&a)?;
            if best.as_ref().is_none_or(|(s, w)| (size, &canon) < (*s, w)) {
                best = Some((size, canon));
            }
        }
        if !advance(&mut combo, p) {
            break;
        }
    }
    Ok(best.expect("at least one subset"))
}

/// Seeded simulated annealing over m-subsets with single swap moves,
/// starting from `{0, ..., m−1}` at temperature `m` and cooling by [`COOLING`].
/// Reports the best set seen, so the result never worsens as the budget grows.
pub fn heuristic_min_dilate_sumset(task: &SearchTask) -> Result<SearchResult> {
    if task.mode != Mode::Heuristic {
        return Err(Error::invalid("heuristic search needs mode = heuristic"));
    }
    let n = task.validate()?;
    let m = task.m as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(task.seed);
    let mut members: Vec<usize> = (0..m).collect();
    let mut others: Vec<usize> = (m..n).collect();
    let mut current = ResidueSet::from_elements(n, members.iter().map(|&x| x as u64))?;
    let mut value = dilate_sum_size(&current, task.lambda);
    let mut best = (value, current.clone());
    let mut evaluated = 1u64;
    let mut temperature = m as f64;
    if !others.is_empty() {
        for _ in 0..task.budget {
            let i = rng.gen_range(0..members.len());
            let j = rng.gen_range(0..others.len());
            let (out, inn) = (members[i], others[j]);
            current.remove(out);
            current.insert(inn);
            let candidate = dilate_sum_size(&current, task.lambda);
            evaluated += 1;
            let delta = candidate as f64 - value as f64;
            let accept = delta <= 0.0 || rng.gen::<f64>() < (-delta / temperature).exp();
            if accept {
                members[i] = inn;
                others[j] = out;
                value = candidate;
                if value < best.0 {
                    best = (value, current.clone());
                }
            } else {
                current.remove(inn);
                current.insert(out);
            }
            temperature *= COOLING;
        }
    }
    Ok(SearchResult {
        task: task.clone(),
        task_digest: task.digest(),
        min_size: best.0,
        witness: canonical_form(&best.1)?,
        classes_enumerated: evaluated,
        exact: false,
    })
}
