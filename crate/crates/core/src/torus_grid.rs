//! Discretized torus geometry.
//!
//! A [`GridSet`] is a set of cells of the grid `(Z/λZ)^n`; cell `x` stands for
//! the half-open box `Π [x_i/λ, (x_i+1)/λ)` of the torus `T^n`. Cells are
//! flattened with the first coordinate most significant, so the flat index of
//! `x` is `Σ x_i λ^{n-i}`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::{floor_to_biguint, from_int, to_f64, Rational};
use crate::zp_core::{convolve_support, NTT_MAX_LEN};

/// Upper bound on `λ^n` for any grid (flat indices must fit comfortably in u64).
pub const GRID_INDEX_CAP: u64 = 1 << 40;
/// Upper bound on the number of cells materialized at once.
pub const GRID_CELL_CAP: u64 = 1 << 26;

fn grid_volume(dim: usize, lambda: u64) -> Result<u64> {
    let mut total: u64 = 1;
    for _ in 0..dim {
        total = total
            .checked_mul(lambda)
            .filter(|&t| t <= GRID_INDEX_CAP)
            .ok_or_else(|| Error::cap("grid size lambda^n", u128::from(lambda).pow(dim as u32), GRID_INDEX_CAP))?;
    }
    Ok(total)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GridSet {
    dim: usize,
    lambda: u64,
    cells: Vec<u64>,
}

impl GridSet {
    pub fn empty(dim: usize, lambda: u64) -> Result<Self> {
        Self::from_indices(dim, lambda, Vec::new())
    }

    /// Builds a grid set from flattened cell indices (any order, duplicates allowed).
    pub fn from_indices(dim: usize, lambda: u64, mut cells: Vec<u64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("grid dimension must be >= 1"));
        }
        if lambda < 2 {
            return Err(Error::invalid(format!("grid resolution must be >= 2, got {lambda}")));
        }
        let total = grid_volume(dim, lambda)?;
        cells.sort_unstable();
        cells.dedup();
        if let Some(&last) = cells.last() {
            if last >= total {
                return Err(Error::invalid(format!("cell index {last} outside grid of {total} cells")));
            }
        }
        Ok(GridSet { dim, lambda, cells })
    }

    pub fn from_tuples<I, T>(dim: usize, lambda: u64, tuples: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u64]>,
    {
        let mut cells = Vec::new();
        for t in tuples {
            let t = t.as_ref();
            if t.len() != dim {
                return Err(Error::invalid(format!("cell {t:?} has wrong dimension, want {dim}")));
            }
            if let Some(bad) = t.iter().find(|&&x| x >= lambda) {
                return Err(Error::invalid(format!("coordinate {bad} outside [0, {lambda})")));
            }
            cells.push(t.iter().fold(0u64, |acc, &x| acc * lambda + x));
        }
        Self::from_indices(dim, lambda, cells)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> u64 {
        self.lambda
    }

    /// Sorted flat indices.
    pub fn indices(&self) -> &[u64] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_cells(&self) -> u64 {
        self.lambda.pow(self.dim as u32)
    }

    pub fn coords(&self, index: u64) -> Vec<u64> {
        let mut out = vec![0; self.dim];
        let mut rest = index;
        for slot in out.iter_mut().rev() {
            *slot = rest % self.lambda;
            rest /= self.lambda;
        }
        out
    }

    pub fn tuples(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        self.cells.iter().map(|&i| self.coords(i))
    }

    pub fn contains(&self, tuple: &[u64]) -> bool {
        tuple.len() == self.dim
            && tuple.iter().all(|&x| x < self.lambda)
            && self
                .cells
                .binary_search(&tuple.iter().fold(0, |acc, &x| acc * self.lambda + x))
                .is_ok()
    }

    /// `|cells| / λ^n`, exactly.
    pub fn measure(&self) -> Rational {
        Rational::new(
            BigInt::from(self.cells.len()),
            BigInt::from(self.lambda).pow(self.dim as u32),
        )
    }
}

impl fmt::Debug for GridSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `n=<n>;lambda=<λ>;cells=[(x1,...,xn),...]`
impl fmt::Display for GridSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={};lambda={};cells=[", self.dim, self.lambda)?;
        for (i, t) in self.tuples().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str("(")?;
            for (j, x) in t.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str(")")?;
        }
        f.write_str("]")
    }
}

fn parse_field<'a>(part: Option<&'a str>, key: &str, src: &str) -> Result<&'a str> {
    part.and_then(|p| p.strip_prefix(key))
        .and_then(|p| p.strip_prefix('='))
        .ok_or_else(|| Error::Parse(format!("expected `{key}=` in {src:?}")))
}

impl FromStr for GridSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut parts = compact.splitn(3, ';');
        let bad = |what: &str| Error::Parse(format!("bad {what} in grid set {s:?}"));
        let dim: usize = parse_field(parts.next(), "n", s)?.parse().map_err(|_| bad("n"))?;
        let lambda: u64 = parse_field(parts.next(), "lambda", s)?
            .parse()
            .map_err(|_| bad("lambda"))?;
        let body = parse_field(parts.next(), "cells", s)?
            .strip_prefix('[')
            .and_then(|b| b.strip_suffix(']'))
            .ok_or_else(|| bad("cell list"))?;
        let mut tuples = Vec::new();
        let mut rest = body;
        while !rest.is_empty() {
            let inner = rest.strip_prefix('(').ok_or_else(|| bad("cell"))?;
            let (tuple, after) = inner.split_once(')').ok_or_else(|| bad("cell"))?;
            let coords = tuple
                .split(',')
                .map(|x| x.parse::<u64>().map_err(|_| bad("coordinate")))
                .collect::<Result<Vec<_>>>()?;
            tuples.push(coords);
            rest = after.strip_prefix(',').unwrap_or(after);
        }
        GridSet::from_tuples(dim, lambda, tuples)
    }
}

/// A box side length, exact or as a real root `radicand^{1/index}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Side {
    Exact(Rational),
    Root { radicand: Rational, index: u32 },
}

impl Side {
    fn validate(&self) -> Result<()> {
        let value = match self {
            Side::Exact(r) => r,
            Side::Root { radicand, index } => {
                if *index == 0 {
                    return Err(Error::invalid("root index must be >= 1"));
                }
                radicand
            }
        };
        if !value.is_positive() || *value >= Rational::one() {
            return Err(Error::invalid(format!("box side {value} must lie in (0, 1)")));
        }
        Ok(())
    }

    /// `floor(λ·s)`, computed exactly (integer roots for `Root`).
    pub fn scaled_floor(&self, lambda: u64) -> BigUint {
        match self {
            Side::Exact(r) => floor_to_biguint(&(r * from_int(lambda))),
            Side::Root { radicand, index } => {
                let scaled = radicand * from_int(BigInt::from(lambda).pow(*index));
                floor_to_biguint(&scaled).nth_root(*index)
            }
        }
    }

    pub fn approx(&self) -> f64 {
        match self {
            Side::Exact(r) => to_f64(r),
            Side::Root { radicand, index } => to_f64(radicand).powf(1.0 / *index as f64),
        }
    }
}

/// Sides of the cube `(0, γ^{1/d})^d`, which has measure γ.
pub fn cube_sides(d: usize, gamma: &Rational) -> Vec<Side> {
    vec![
        Side::Root {
            radicand: gamma.clone(),
            index: d as u32,
        };
        d
    ]
}

/// Sides `(2γ)^{1/3} × (γ/4)^{1/3} × (2γ)^{1/3}` of the rebalanced 3-box.
pub fn optimized_d3_sides(gamma: &Rational) -> Vec<Side> {
    let outer = Side::Root {
        radicand: gamma * from_int(2),
        index: 3,
    };
    let inner = Side::Root {
        radicand: gamma / from_int(4),
        index: 3,
    };
    vec![outer.clone(), inner, outer]
}

/// `2^{d-1} γ^{1-1/d}`, the projection-sum measure of the cube of measure γ.
pub fn cube_bound(d: usize, gamma: f64) -> f64 {
    2f64.powi(d as i32 - 1) * gamma.powf(1.0 - 1.0 / d as f64)
}

/// `(9 / 2^{4/3}) γ^{2/3}`, the same quantity for the rebalanced 3-box.
pub fn optimized_d3_bound(gamma: f64) -> f64 {
    9.0 / 2f64.powf(4.0 / 3.0) * gamma.powf(2.0 / 3.0)
}

/// Cells of `(0, s_1) × ... × (0, s_d)` at resolution λ: all `x` with
/// `x_i ≥ 1` and `(x_i + 1)/λ ≤ s_i`.
pub fn box_grid_set(d: usize, lambda: u64, sides: &[Side]) -> Result<GridSet> {
    if sides.len() != d {
        return Err(Error::invalid(format!("expected {d} sides, got {}", sides.len())));
    }
    sides.iter().try_for_each(Side::validate)?;
    grid_volume(d, lambda)?;
    let ranges: Vec<u64> = sides
        .iter()
        .map(|s| {
            let top = s.scaled_floor(lambda).to_u64().unwrap_or(u64::MAX).min(lambda);
            top.saturating_sub(1)
        })
        .collect();
    let count = ranges.iter().map(|&c| c as u128).product::<u128>();
    if count > GRID_CELL_CAP as u128 {
        return Err(Error::cap("box cells", count, GRID_CELL_CAP));
    }
    let mut cells = Vec::with_capacity(count as usize);
    if count > 0 {
        let mut x = vec![1u64; d];
        loop {
            cells.push(x.iter().fold(0, |acc, &v| acc * lambda + v));
            let mut i = d;
            loop {
                if i == 0 {
                    return GridSet::from_indices(d, lambda, cells);
                }
                i -= 1;
                if x[i] < ranges[i] {
                    x[i] += 1;
                    break;
                }
                x[i] = 1;
            }
        }
    }
    GridSet::from_indices(d, lambda, cells)
}

fn require_projectable(s: &GridSet) -> Result<()> {
    if s.dim < 2 {
        return Err(Error::invalid("projection needs dimension >= 2"));
    }
    Ok(())
}

/// Image under the map forgetting the first coordinate.
pub fn project_drop_first(s: &GridSet) -> Result<GridSet> {
    require_projectable(s)?;
    let lower = s.lambda.pow(s.dim as u32 - 1);
    GridSet::from_indices(s.dim - 1, s.lambda, s.cells.iter().map(|&c| c % lower).collect())
}

/// Image under the map forgetting the last coordinate.
pub fn project_drop_last(s: &GridSet) -> Result<GridSet> {
    require_projectable(s)?;
    GridSet::from_indices(s.dim - 1, s.lambda, s.cells.iter().map(|&c| c / s.lambda).collect())
}

/// Coordinatewise sum of two grid sets mod λ, by multi-dimensional convolution.
///
/// Each coordinate is embedded with radix `2λ - 1` so that digit sums never
/// carry; one linear transform then yields every coordinate sum at once.
pub fn grid_sumset(a: &GridSet, b: &GridSet) -> Result<GridSet> {
    if a.dim != b.dim || a.lambda != b.lambda {
        return Err(Error::invalid("grid sumset needs equal dimension and resolution"));
    }
    if a.is_empty() || b.is_empty() {
        return GridSet::empty(a.dim, a.lambda);
    }
    let radix = 2 * a.lambda - 1;
    let padded = (radix as u128).checked_pow(a.dim as u32).unwrap_or(u128::MAX);
    if padded.saturating_mul(2) > NTT_MAX_LEN as u128 {
        return grid_sumset_pairwise(a, b);
    }
    let pad = |g: &GridSet| {
        let mut v = vec![false; padded as usize];
        for t in g.tuples() {
            v[t.iter().fold(0u64, |acc, &x| acc * radix + x) as usize] = true;
        }
        v
    };
    let support = convolve_support(&pad(a), &pad(b))?;
    let mut cells = Vec::new();
    for (i, &hit) in support.iter().enumerate() {
        if !hit {
            continue;
        }
        let mut rest = i as u64;
        let mut digits = vec![0; a.dim];
        for slot in digits.iter_mut().rev() {
            *slot = (rest % radix) % a.lambda;
            rest /= radix;
        }
        cells.push(digits.iter().fold(0, |acc, &x| acc * a.lambda + x));
    }
    GridSet::from_indices(a.dim, a.lambda, cells)
}

/// Reference route for [`grid_sumset`]: all pairs, coordinatewise.
pub fn grid_sumset_pairwise(a: &GridSet, b: &GridSet) -> Result<GridSet> {
    if a.dim != b.dim || a.lambda != b.lambda {
        return Err(Error::invalid("grid sumset needs equal dimension and resolution"));
    }
    let pairs = a.len() as u128 * b.len() as u128;
    if pairs > 1_000_000_000 {
        return Err(Error::cap("grid sumset pairs", pairs, 1_000_000_000u128));
    }
    let bt: Vec<Vec<u64>> = b.tuples().collect();
    let mut cells = Vec::new();
    for x in a.tuples() {
        for y in &bt {
            cells.push(
                x.iter()
                    .zip(y)
                    .fold(0, |acc, (&p, &q)| acc * a.lambda + (p + q) % a.lambda),
            );
        }
    }
    GridSet::from_indices(a.dim, a.lambda, cells)
}

/// `S' = π_1(S) + π_n(S) + {0,1}^{n-1}`.
///
/// For `B' = ⋃_{x∈S} C_x`, `|S'| / λ^{n-1}` is the measure of
/// `π_1(B') + π_n(B')`: two half-open cells of side 1/λ sum to a box of side 2/λ.
pub fn grid_projection_sumset(s: &GridSet) -> Result<GridSet> {
    require_projectable(s)?;
    let sum = grid_sumset(&project_drop_first(s)?, &project_drop_last(s)?)?;
    add_unit_cube(&sum)
}

/// `G + {0,1}^m` on the grid, one coordinate at a time.
pub fn add_unit_cube(g: &GridSet) -> Result<GridSet> {
    let total = g.total_cells();
    if total > GRID_CELL_CAP {
        return Err(Error::cap("dense grid bitmap", total, GRID_CELL_CAP));
    }
    let mut dense = vec![false; total as usize];
    g.cells.iter().for_each(|&c| dense[c as usize] = true);
    let lambda = g.lambda;
    let mut stride = 1u64;
    for _ in 0..g.dim {
        let snapshot = dense.clone();
        for (idx, &hit) in snapshot.iter().enumerate() {
            if hit {
                let digit = (idx as u64 / stride) % lambda;
                let next = if digit == lambda - 1 {
                    idx as u64 - (lambda - 1) * stride
                } else {
                    idx as u64 + stride
                };
                dense[next as usize] = true;
            }
        }
        stride *= lambda;
    }
    let cells = dense
        .iter()
        .enumerate()
        .filter_map(|(i, &hit)| hit.then_some(i as u64))
        .collect();
    GridSet::from_indices(g.dim, lambda, cells)
}

fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn digit_sum_count_radix(m: u64, radix: u64, t: i64) -> BigUint {
    if t < 0 {
        return BigUint::zero();
    }
    if radix == 1 {
        return BigUint::one();
    }
    if t as u128 >= m as u128 * (radix as u128 - 1) {
        return BigUint::from(radix).pow(m as u32);
    }
    // Inclusion-exclusion over coordinates forced to overflow the radix.
    let mut total = BigInt::zero();
    for j in 0..=m {
        let rest = t as i128 - j as i128 * radix as i128;
        if rest < 0 {
            break;
        }
        let term = binomial(m, j) * binomial(rest as u64 + m, m);
        if j % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total.to_biguint().expect("count is non-negative")
}

/// `#{x ∈ [0,λ)^m : Σ x_i ≤ t}` without enumeration.
pub fn digit_sum_count(m: u64, lambda: u64, t: i64) -> Result<BigUint> {
    if m < 1 || lambda < 2 {
        return Err(Error::invalid(format!("digit_sum_count needs m >= 1 and lambda >= 2, got m={m}, lambda={lambda}")));
    }
    Ok(digit_sum_count_radix(m, lambda, t))
}

/// The symbolic set `{x ∈ [0,λ)^m : Σ x_i ≤ t}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitSumSet {
    pub dim: u64,
    pub lambda: u64,
    pub threshold: i64,
}

impl DigitSumSet {
    pub fn new(dim: u64, lambda: u64, threshold: i64) -> Result<Self> {
        digit_sum_count(dim, lambda, 0)?;
        Ok(DigitSumSet { dim, lambda, threshold })
    }

    pub fn count(&self) -> BigUint {
        digit_sum_count_radix(self.dim, self.lambda, self.threshold)
    }

    pub fn measure(&self) -> Rational {
        Rational::new(
            BigInt::from(self.count()),
            BigInt::from(self.lambda).pow(self.dim as u32),
        )
    }

    pub fn expand(&self) -> Result<GridSet> {
        let dim = self.dim as usize;
        let total = grid_volume(dim, self.lambda)?;
        if total > GRID_CELL_CAP {
            return Err(Error::cap("digit-sum expansion", total, GRID_CELL_CAP));
        }
        let cells = (0..total)
            .filter(|&idx| {
                let mut rest = idx;
                let mut sum = 0i64;
                for _ in 0..dim {
                    sum += (rest % self.lambda) as i64;
                    rest /= self.lambda;
                }
                sum <= self.threshold
            })
            .collect();
        GridSet::from_indices(dim, self.lambda, cells)
    }
}

/// `m=<m>;lambda=<λ>;t=<t>`
impl fmt::Display for DigitSumSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m={};lambda={};t={}", self.dim, self.lambda, self.threshold)
    }
}

impl FromStr for DigitSumSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut parts = compact.split(';');
        let bad = |what: &str| Error::Parse(format!("bad {what} in digit-sum set {s:?}"));
        let dim = parse_field(parts.next(), "m", s)?.parse().map_err(|_| bad("m"))?;
        let lambda = parse_field(parts.next(), "lambda", s)?.parse().map_err(|_| bad("lambda"))?;
        let t = parse_field(parts.next(), "t", s)?.parse().map_err(|_| bad("t"))?;
        if parts.next().is_some() {
            return Err(bad("trailing field"));
        }
        DigitSumSet::new(dim, lambda, t)
    }
}

fn factorial(m: u64) -> BigInt {
    (1..=m).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Volume of `{x ∈ [0,1]^m : Σ x_i < s}`:
/// `(1/m!) Σ_{j=0}^{⌊s⌋} (-1)^j C(m,j) (s-j)^m`, clamped to `[0, 1]`.
pub fn irwin_hall_volume(m: u64, s: &Rational) -> Result<Rational> {
    if m < 1 {
        return Err(Error::invalid("Irwin-Hall volume needs m >= 1"));
    }
    if !s.is_positive() {
        return Ok(Rational::zero());
    }
    if *s >= from_int(m) {
        return Ok(Rational::one());
    }
    let top = s.floor().to_integer().to_u64().expect("0 <= floor(s) < m");
    let mut acc = Rational::zero();
    for j in 0..=top {
        let base = s - from_int(j);
        let term = base.pow(m as i32) * from_int(binomial(m, j));
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc / from_int(factorial(m)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexMeasures {
    pub n: u64,
    /// μ(B) for `B = {x : x_i > 0, Σ x_i < n/2 - 1}` in `T^n`.
    pub mu_b: Rational,
    /// μ(C + C) for `C + C = {x : Σ x_i < n - 2}` in `T^{n-1}`.
    pub mu_cc: Rational,
}

/// Exact measures of the simplex construction; requires `n ≥ 4`.
pub fn simplex_construction(n: u64) -> Result<SimplexMeasures> {
    if n < 4 {
        return Err(Error::invalid(format!("simplex construction needs n >= 4 (mu(B) = 0 below), got {n}")));
    }
    let mu_b = irwin_hall_volume(n, &Rational::new(BigInt::from(n) - 2, BigInt::from(2)))?;
    let mu_cc = irwin_hall_volume(n - 1, &from_int(n - 2))?;
    let reflected = Rational::one() - Rational::new(BigInt::one(), factorial(n - 1));
    if mu_cc != reflected || mu_cc >= Rational::one() {
        return Err(Error::ChainViolated(format!(
            "mu(C+C) = {mu_cc} but 1 - 1/(n-1)! = {reflected}"
        )));
    }
    Ok(SimplexMeasures { n, mu_b, mu_cc })
}

/// Threshold on `Σ y_i` for the shifted digits `y_i = x_i - 1 ∈ [0, λ-2]` of simplex cells.
fn simplex_digit_threshold(n: u64, lambda: u64) -> i64 {
    // Σ (x_i + 1) ≤ λ(n/2 - 1)  ⇔  Σ y_i ≤ ⌊λ(n-2)/2⌋ - 2n
    ((lambda as i128 * (n as i128 - 2)).div_euclid(2) - 2 * n as i128) as i64
}

/// Number of cells of the simplex set at resolution λ, without enumeration.
pub fn simplex_cell_count(n: u64, lambda: u64) -> Result<BigUint> {
    if n < 1 || lambda < 2 {
        return Err(Error::invalid("simplex cells need n >= 1 and lambda >= 2"));
    }
    Ok(digit_sum_count_radix(n, lambda - 1, simplex_digit_threshold(n, lambda)))
}

/// Cells `x` with all `x_i ≥ 1` and `Σ (x_i + 1) ≤ λ(n/2 - 1)`.
pub fn simplex_grid_set(n: u64, lambda: u64) -> Result<GridSet> {
    let dim = n as usize;
    let total = grid_volume(dim, lambda)?;
    if total > GRID_CELL_CAP {
        return Err(Error::cap("simplex grid enumeration", total, GRID_CELL_CAP));
    }
    let bound = lambda as i128 * (n as i128 - 2);
    let cells = (0..total)
        .filter(|&idx| {
            let mut rest = idx;
            let mut sum = 0i128;
            for _ in 0..dim {
                let x = rest % lambda;
                if x == 0 {
                    return false;
                }
                sum += x as i128 + 1;
                rest /= lambda;
            }
            2 * sum <= bound
        })
        .collect();
    GridSet::from_indices(dim, lambda, cells)
}
