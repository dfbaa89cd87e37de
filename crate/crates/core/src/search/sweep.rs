use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::{exact_min_dilate_sumset_capped, heuristic_min_dilate_sumset, Mode, SearchResult, SearchTask, DEFAULT_EXACT_CAP};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// How the set sizes `m` of a sweep cell are chosen for a modulus `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MRule {
    /// `lo..=hi`, clipped to `1..=p`.
    Range { lo: u64, hi: u64 },
    Fixed(u64),
    /// `⌈α p⌉`.
    FractionCeil(Rational),
    /// `1..=(p−1)/2`.
    UpToHalf,
}

impl MRule {
    pub fn values(&self, p: u64) -> Vec<u64> {
        match self {
            MRule::Range { lo, hi } => ((*lo).max(1)..=(*hi).min(p)).collect(),
            MRule::Fixed(m) => vec![*m],
            MRule::FractionCeil(alpha) => {
                let m = (alpha * Rational::from_integer(BigInt::from(p))).ceil().to_integer();
                vec![m.to_u64().unwrap_or(0)]
            }
            MRule::UpToHalf => (1..=p.saturating_sub(1) / 2).collect(),
        }
    }
}

/// Storage for finished results, keyed by task digest.
pub trait ResultCache {
    fn get(&mut self, digest: &str) -> Option<SearchResult>;
    fn put(&mut self, result: &SearchResult) -> Result<()>;
}

#[derive(Debug, Default, Clone)]
pub struct MemoryCache {
    entries: HashMap<String, SearchResult>,
}

impl MemoryCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ResultCache for MemoryCache {
    fn get(&mut self, digest: &str) -> Option<SearchResult> {
        self.entries.get(digest).cloned()
    }

    fn put(&mut self, result: &SearchResult) -> Result<()> {
        self.entries.insert(result.task_digest.clone(), result.clone());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepConfig {
    pub p_list: Vec<u64>,
    pub lambda_list: Vec<i64>,
    pub m_rule: MRule,
    pub mode: Mode,
    pub seed: u64,
    pub budget: u64,
    pub exact_cap: u128,
}

impl SweepConfig {
    pub fn exact(p_list: Vec<u64>, lambda_list: Vec<i64>, m_rule: MRule) -> Self {
        SweepConfig {
            p_list,
            lambda_list,
            m_rule,
            mode: Mode::Exact,
            seed: 0,
            budget: 0,
            exact_cap: DEFAULT_EXACT_CAP,
        }
    }

    /// Cells in emission order: `p`, then `λ`, then `m`.
    pub fn tasks(&self) -> Vec<SearchTask> {
        let mut out = Vec::new();
        for &p in &self.p_list {
            for &lambda in &self.lambda_list {
                for m in self.m_rule.values(p) {
                    out.push(match self.mode {
                        Mode::Exact => SearchTask::exact(p, lambda, m),
                        Mode::Heuristic => SearchTask::heuristic(p, lambda, m, self.seed, self.budget),
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepCell {
    pub task: SearchTask,
    pub outcome: std::result::Result<SearchResult, Error>,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepOutcome {
    pub cells: Vec<SweepCell>,
    pub cache_hits: usize,
    pub computed: usize,
}

impl SweepOutcome {
    pub fn results(&self) -> impl Iterator<Item = &SearchResult> {
        self.cells.iter().filter_map(|c| c.outcome.as_ref().ok())
    }

    pub fn errors(&self) -> impl Iterator<Item = (&SearchTask, &Error)> {
        self.cells.iter().filter_map(|c| c.outcome.as_ref().err().map(|e| (&c.task, e)))
    }
}

/// Runs every cell in order, reusing cached results. A failing cell records
/// its error and the sweep moves on; failures are not cached.
pub fn sweep(config: &SweepConfig, cache: &mut dyn ResultCache) -> SweepOutcome {
    let mut cells = Vec::new();
    let (mut cache_hits, mut computed) = (0, 0);
    for task in config.tasks() {
        let digest = task.digest();
        if let Some(hit) = cache.get(&digest).filter(|r| r.task == task) {
            cache_hits += 1;
            cells.push(SweepCell {
                task,
                outcome: Ok(hit),
                cached: true,
            });
            continue;
        }
        let outcome = match task.mode {
            Mode::Exact => exact_min_dilate_sumset_capped(&task, config.exact_cap),
            Mode::Heuristic => heuristic_min_dilate_sumset(&task),
        };
        computed += 1;
        let outcome = outcome.and_then(|r| cache.put(&r).map(|()| r));
        cells.push(SweepCell {
            task,
            outcome,
            cached: false,
        });
    }
    SweepOutcome {
        cells,
        cache_hits,
        computed,
    }
}
