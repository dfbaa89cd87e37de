//! Base-λ encoding of grid sets into interval sets on the circle `T = R/Z`,
//! exact interval arithmetic for `A + λ·A`, and discretization into Z/pZ.
//!
//! Together these form an executable version of the chain
//! `|A' + λ·A'|/p ≤ μ(A + λ·A) ≤ μ(π_1(B') + π_n(B'))`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prime::is_prime;
use crate::rational::{Exact, Rational};
use crate::torus_grid::{grid_projection_sumset, GridSet};
use crate::zp_core::{dilate_sum, Kernel, ResidueSet};

/// Default guard on pairwise interval sums.
pub const DEFAULT_PAIR_CAP: u128 = 1_000_000;
/// Largest denominator accepted when encoding a grid set.
pub const ENCODE_DENOMINATOR_CAP: u128 = 1 << 40;

/// A finite union of half-open arcs `[a/D, b/D)` on the circle.
///
/// Intervals are sorted, disjoint and non-adjacent, with `0 ≤ a < b ≤ D`;
/// an arc through 0 is stored as two pieces.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TorusIntervalSet {
    denominator: u128,
    intervals: Vec<(u128, u128)>,
}

impl TorusIntervalSet {
    pub fn empty(denominator: u128) -> Result<Self> {
        Self::from_arcs(denominator, std::iter::empty())
    }

    pub fn full(denominator: u128) -> Result<Self> {
        Self::from_arcs(denominator, [(0, denominator)])
    }

    /// Builds a normalized set from `[a, b)` pairs with `0 ≤ a < b ≤ D`.
    pub fn new(denominator: u128, intervals: &[(u128, u128)]) -> Result<Self> {
        if let Some(&(a, b)) = intervals.iter().find(|&&(a, b)| a >= b || b > denominator) {
            return Err(Error::invalid(format!("interval [{a},{b}) invalid for denominator {denominator}")));
        }
        Self::from_arcs(denominator, intervals.iter().map(|&(a, b)| (a, b - a)))
    }

    /// Normalizes arcs given as `(start, length)`; starts are reduced mod D and
    /// arcs crossing 0 are split.
    fn from_arcs<I>(denominator: u128, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u128, u128)>,
    {
        if denominator == 0 {
            return Err(Error::invalid("denominator must be positive"));
        }
        let d = denominator;
        let mut pieces = Vec::new();
        for (start, len) in arcs {
            if len == 0 {
                continue;
            }
            if len >= d {
                pieces.clear();
                pieces.push((0, d));
                break;
            }
            let a = start % d;
            let end = a + len;
            if end <= d {
                pieces.push((a, end));
            } else {
                pieces.push((a, d));
                pieces.push((0, end - d));
            }
        }
        pieces.sort_unstable();
        let mut intervals: Vec<(u128, u128)> = Vec::with_capacity(pieces.len());
        for (a, b) in pieces {
            match intervals.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => intervals.push((a, b)),
            }
        }
        Ok(TorusIntervalSet { denominator, intervals })
    }

    pub fn denominator(&self) -> u128 {
        self.denominator
    }

    pub fn intervals(&self) -> &[(u128, u128)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.intervals == [(0, self.denominator)]
    }

    pub fn total_length(&self) -> u128 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn measure(&self) -> Rational {
        Rational::new(BigInt::from(self.total_length()), BigInt::from(self.denominator))
    }

    /// The same set over the denominator `target`, which must be a multiple of D.
    pub fn rescale(&self, target: u128) -> Result<Self> {
        if target == 0 || !target.is_multiple_of(self.denominator) {
            return Err(Error::invalid(format!("{target} is not a multiple of {}", self.denominator)));
        }
        let f = target / self.denominator;
        let intervals = self
            .intervals
            .iter()
            .map(|&(a, b)| Ok((mul(a, f)?, mul(b, f)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(TorusIntervalSet { denominator: target, intervals })
    }

    /// Exact containment, comparing over the common denominator `lcm(D, D')`.
    pub fn is_subset_of(&self, other: &TorusIntervalSet) -> Result<bool> {
        let common = self.denominator.lcm(&other.denominator);
        let inner = self.rescale(common)?;
        let outer = other.rescale(common)?;
        let mut j = 0;
        for &(a, b) in &inner.intervals {
            while j < outer.intervals.len() && outer.intervals[j].1 <= a {
                j += 1;
            }
            match outer.intervals.get(j) {
                Some(&(c, d)) if c <= a && b <= d => {}
                _ => return Ok(false),
            }
        }
        Ok(true)
    }
}

fn mul(a: u128, b: u128) -> Result<u128> {
    a.checked_mul(b).ok_or(Error::Overflow("interval endpoint arithmetic"))
}

impl fmt::Debug for TorusIntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `D=<D>;[a1,b1);[a2,b2);...`
impl fmt::Display for TorusIntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D={}", self.denominator)?;
        for (a, b) in &self.intervals {
            write!(f, ";[{a},{b})")?;
        }
        Ok(())
    }
}

impl FromStr for TorusIntervalSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = |what: &str| Error::Parse(format!("bad {what} in interval set {s:?}"));
        let mut parts = compact.split(';').filter(|p| !p.is_empty());
        let d: u128 = parts
            .next()
            .and_then(|p| p.strip_prefix("D="))
            .ok_or_else(|| bad("header"))?
            .parse()
            .map_err(|_| bad("denominator"))?;
        let mut intervals = Vec::new();
        for part in parts {
            let (a, b) = part
                .strip_prefix('[')
                .and_then(|p| p.strip_suffix(')'))
                .and_then(|p| p.split_once(','))
                .ok_or_else(|| bad("interval"))?;
            intervals.push((
                a.parse().map_err(|_| bad("endpoint"))?,
                b.parse().map_err(|_| bad("endpoint"))?,
            ));
        }
        TorusIntervalSet::new(d, &intervals)
    }
}

/// Maps each cell `x` to `I_x = [y, y + λ^{-n})` with `y = Σ x_i λ^{-i}`,
/// i.e. `[idx, idx + 1)` over `D = λ^n`, and takes the union.
pub fn encode_grid_to_intervals(s: &GridSet) -> Result<TorusIntervalSet> {
    let d = (s.lambda() as u128).pow(s.dim() as u32);
    if d > ENCODE_DENOMINATOR_CAP {
        return Err(Error::cap("encoding denominator lambda^n", d, ENCODE_DENOMINATOR_CAP));
    }
    TorusIntervalSet::from_arcs(d, s.indices().iter().map(|&c| (c as u128, 1)))
}

/// `A + λ·A` on the circle, exactly.
pub fn interval_dilate_sum(a: &TorusIntervalSet, lambda: u64) -> Result<TorusIntervalSet> {
    interval_dilate_sum_capped(a, lambda, DEFAULT_PAIR_CAP)
}

pub fn interval_dilate_sum_capped(a: &TorusIntervalSet, lambda: u64, pair_cap: u128) -> Result<TorusIntervalSet> {
    if lambda < 2 {
        return Err(Error::invalid(format!("interval dilate sum needs lambda >= 2, got {lambda}")));
    }
    let d = a.denominator;
    let l = lambda as u128;
    // λ·[a, b) = [λa, λb) read mod 1; it covers everything once λ(b - a) ≥ D.
    let dilated = TorusIntervalSet::from_arcs(
        d,
        a.intervals
            .iter()
            .map(|&(x, y)| Ok((mul(x, l)? % d, mul(y - x, l)?.min(d))))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let pairs = a.intervals.len() as u128 * dilated.intervals.len() as u128;
    if pairs > pair_cap {
        return Err(Error::cap("interval pairs", pairs, pair_cap));
    }
    let mut arcs = Vec::with_capacity(pairs as usize);
    for &(x, y) in &a.intervals {
        for &(u, v) in &dilated.intervals {
            arcs.push(((x + u) % d, (y - x) + (v - u)));
        }
    }
    TorusIntervalSet::from_arcs(d, arcs)
}

/// `A' = {a : [a/p, (a+1)/p) ⊆ A}` for prime p.
pub fn discretize_to_zp(a: &TorusIntervalSet, p: u64) -> Result<ResidueSet> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    discretize(a, p)
}

/// [`discretize_to_zp`] without the primality requirement.
pub fn discretize(a: &TorusIntervalSet, modulus: u64) -> Result<ResidueSet> {
    if modulus == 0 {
        return Err(Error::invalid("modulus must be positive"));
    }
    let d = a.denominator;
    let p = modulus as u128;
    let mut out = ResidueSet::empty(modulus as usize);
    for &(lo, hi) in &a.intervals {
        // a·D ≥ lo·p and (a+1)·D ≤ hi·p
        let first = mul(lo, p)?.div_ceil(d);
        let end = mul(hi, p)? / d;
        for r in first..end {
            out.insert(r as usize);
        }
    }
    Ok(out)
}

/// Every quantity in the chain for one grid set and one prime.
#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub dim: usize,
    pub lambda: u64,
    pub p: u64,
    pub cells: usize,
    pub intervals: usize,
    /// μ(A) = |S| / λ^n.
    pub torus_measure: Exact,
    /// |A'| / p.
    pub zp_density: Exact,
    /// μ(A) - |A'|/p.
    pub discretization_slack: Exact,
    /// |A' + λ·A'| / p.
    pub zp_dilate_sum: Exact,
    /// μ(A + λ·A).
    pub torus_dilate_sum: Exact,
    /// |S'| / λ^{n-1} = μ(π_1(B') + π_n(B')).
    pub grid_prediction: Exact,
    pub zp_le_torus: bool,
    pub torus_le_grid: bool,
    /// A + λ·A ⊆ ⋃_{x∈S'} I_x over denominator λ^{n-1}.
    pub overflow_contained: bool,
}

impl ChainReport {
    pub fn holds(&self) -> bool {
        self.zp_le_torus && self.torus_le_grid && self.overflow_contained
    }
}

/// Runs the chain and reports every quantity, without judging it.
pub fn pipeline_report(s: &GridSet, p: u64) -> Result<ChainReport> {
    if s.dim() < 2 {
        return Err(Error::invalid("the chain needs a grid of dimension >= 2"));
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let lambda = s.lambda();
    let a = encode_grid_to_intervals(s)?;
    let a_sum = interval_dilate_sum(&a, lambda)?;
    let a_prime = discretize(&a, p)?;
    let zp_sum = dilate_sum(&a_prime, lambda as i64, Kernel::auto(&a_prime, &a_prime));
    let s_prime = grid_projection_sumset(s)?;
    let covering = encode_grid_to_intervals(&s_prime)?;

    let p_big = BigInt::from(p);
    let zp_density = Rational::new(BigInt::from(a_prime.len()), p_big.clone());
    let zp_dilate = Rational::new(BigInt::from(zp_sum.len()), p_big);
    let torus_measure = a.measure();
    let torus_dilate = a_sum.measure();
    let grid_prediction = s_prime.measure();
    Ok(ChainReport {
        dim: s.dim(),
        lambda,
        p,
        cells: s.len(),
        intervals: a.intervals().len(),
        discretization_slack: Exact(&torus_measure - &zp_density),
        zp_le_torus: zp_dilate <= torus_dilate,
        torus_le_grid: torus_dilate <= grid_prediction,
        overflow_contained: a_sum.is_subset_of(&covering)?,
        torus_measure: Exact(torus_measure),
        zp_density: Exact(zp_density),
        zp_dilate_sum: Exact(zp_dilate),
        torus_dilate_sum: Exact(torus_dilate),
        grid_prediction: Exact(grid_prediction),
    })
}

/// [`pipeline_report`], failing hard if any link of the chain breaks.
pub fn pipeline_check(s: &GridSet, p: u64) -> Result<ChainReport> {
    let report = pipeline_report(s, p)?;
    if !report.holds() {
        return Err(Error::ChainViolated(
            serde_json::to_string(&report).unwrap_or_else(|_| format!("{report:?}")),
        ));
    }
    Ok(report)
}
