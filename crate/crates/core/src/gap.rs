//! Generalized arithmetic progressions `{a + Σ n_i v_i : 0 ≤ n_i < k_i}` over Z/pZ.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inequalities::{IneqReport, Sense};
use crate::prime::is_prime;
use crate::rational::from_int;
use crate::zp_core::{dilate, iterated_sumset, sumset_auto, ResidueSet};

/// Largest nominal size that [`Gap::expand`] will enumerate.
pub const EXPAND_CAP: u128 = 1 << 26;
/// Largest modulus accepted by the brute-force finder.
pub const FINDER_MAX_MODULUS: u64 = 101;
/// Largest dimension searched by the brute-force finder.
pub const FINDER_MAX_DIM: usize = 2;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gap {
    modulus: u64,
    base: u64,
    generators: Vec<u64>,
    lengths: Vec<u64>,
}

impl Gap {
    pub fn new(modulus: u64, base: u64, generators: Vec<u64>, lengths: Vec<u64>) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::invalid("GAP modulus must be positive"));
        }
        if generators.len() != lengths.len() {
            return Err(Error::invalid("GAP needs one length per generator"));
        }
        if lengths.contains(&0) {
            return Err(Error::invalid("GAP lengths must be >= 1"));
        }
        if let Some(&bad) = std::iter::once(&base).chain(&generators).find(|&&x| x >= modulus) {
            return Err(Error::ResidueOutOfRange { value: bad, modulus });
        }
        Ok(Gap {
            modulus,
            base,
            generators,
            lengths,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn generators(&self) -> &[u64] {
        &self.generators
    }

    pub fn lengths(&self) -> &[u64] {
        &self.lengths
    }

    pub fn dimension(&self) -> usize {
        self.generators.len()
    }

    /// `Π k_i`.
    pub fn nominal_size(&self) -> u128 {
        self.lengths
            .iter()
            .try_fold(1u128, |acc, &k| acc.checked_mul(k as u128))
            .unwrap_or(u128::MAX)
    }

    /// A zero generator with length at least 2 repeats the same element.
    pub fn is_degenerate(&self) -> bool {
        self.generators.iter().zip(&self.lengths).any(|(&v, &k)| v == 0 && k >= 2)
    }

    pub fn with_base(&self, base: u64) -> Result<Gap> {
        Gap::new(self.modulus, base, self.generators.clone(), self.lengths.clone())
    }

    fn check_cap(&self) -> Result<()> {
        let nominal = self.nominal_size();
        if nominal > EXPAND_CAP {
            return Err(Error::cap("GAP nominal size", nominal, EXPAND_CAP));
        }
        Ok(())
    }

    /// All represented residues.
    pub fn expand(&self) -> Result<ResidueSet> {
        self.check_cap()?;
        let n = self.modulus as usize;
        let mut acc = ResidueSet::from_elements(n, [self.base])?;
        for (&v, &k) in self.generators.iter().zip(&self.lengths) {
            let progression = ResidueSet::from_integers(n, (0..k as i64).map(|j| j * v as i64 % n as i64));
            acc = sumset_auto(&acc, &progression)?;
        }
        Ok(acc)
    }

    /// True iff all `Π k_i` combinations give distinct residues.
    pub fn is_proper(&self) -> Result<bool> {
        self.check_cap()?;
        if self.nominal_size() > self.modulus as u128 {
            return Ok(false);
        }
        Ok(self.expand()?.len() as u128 == self.nominal_size())
    }

    fn tuple_cmp(&self, other: &Gap) -> Ordering {
        (self.base, &self.generators, &self.lengths).cmp(&(other.base, &other.generators, &other.lengths))
    }
}

impl fmt::Debug for Gap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, xs: &[u64]) -> fmt::Result {
    f.write_str("[")?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    f.write_str("]")
}

/// `p=<p>;a=<a>;v=[v1,..];k=[k1,..]`
impl fmt::Display for Gap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={};a={};v=", self.modulus, self.base)?;
        write_list(f, &self.generators)?;
        f.write_str(";k=")?;
        write_list(f, &self.lengths)
    }
}

impl FromStr for Gap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = |what: &str| Error::Parse(format!("bad {what} in GAP literal {s:?}"));
        let fields: Vec<&str> = compact.split(';').collect();
        let [p, a, v, k] = fields[..] else {
            return Err(bad("field count"));
        };
        let field = |text: &'_ str, key: &str| -> Result<String> {
            text.strip_prefix(key)
                .and_then(|t| t.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| bad(key))
        };
        let list = |text: String, key: &str| -> Result<Vec<u64>> {
            let inner = text
                .strip_prefix('[')
                .and_then(|t| t.strip_suffix(']'))
                .ok_or_else(|| bad(key))?;
            if inner.is_empty() {
                return Ok(Vec::new());
            }
            inner.split(',').map(|x| x.parse().map_err(|_| bad(key))).collect()
        };
        Gap::new(
            field(p, "p")?.parse().map_err(|_| bad("p"))?,
            field(a, "a")?.parse().map_err(|_| bad("a"))?,
            list(field(v, "v")?, "v")?,
            list(field(k, "k")?, "k")?,
        )
    }
}

impl Serialize for Gap {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// The sub-GAP on the generators whose lengths reach λ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truncation {
    /// Base 0, generators ordered by descending length.
    pub gap: Gap,
    /// Original generator indices, by descending length (stable); the first
    /// `kept` of them make up `gap`.
    pub order: Vec<usize>,
    pub kept: usize,
}

/// `P' = Σ_{i ≤ m} {0, v_i, ..., (k_i - 1) v_i}` where `m` is the largest index with `k_m ≥ λ`
/// after sorting lengths in descending order.
pub fn truncate_to_large_steps(p: &Gap, lambda: u64) -> Result<Truncation> {
    let mut order: Vec<usize> = (0..p.dimension()).collect();
    order.sort_by(|&i, &j| p.lengths[j].cmp(&p.lengths[i]));
    let kept = order.iter().take_while(|&&i| p.lengths[i] >= lambda).count();
    if kept == 0 {
        return Err(Error::invalid(format!("no GAP length reaches lambda = {lambda}")));
    }
    let gap = Gap::new(
        p.modulus,
        0,
        order[..kept].iter().map(|&i| p.generators[i]).collect(),
        order[..kept].iter().map(|&i| p.lengths[i]).collect(),
    )?;
    Ok(Truncation { gap, order, kept })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpanReport {
    pub lambda: u64,
    pub exponent: u32,
    /// `|P' + λ·P' + ... + λ^d·P'|`.
    pub lhs_size: usize,
    /// `|λ^d P'|` (the `λ^d`-fold sumset).
    pub rhs_size: usize,
    pub contained: bool,
    pub rhs_is_full: bool,
    /// `|λ^d P'| ≥ min(λ^d |P'| - λ^d + 1, p)`, for prime moduli.
    pub cauchy_davenport: Option<IneqReport>,
}

/// Checks `P' + λ·P' + ... + λ^d·P' ⊇ λ^d P'` for a base-0 GAP with every `k_i ≥ λ`.
pub fn lambda_span_check(p_prime: &Gap, lambda: u64, d: u32) -> Result<SpanReport> {
    if p_prime.base != 0 {
        return Err(Error::invalid("span check expects a base-0 GAP"));
    }
    if lambda < 2 {
        return Err(Error::invalid("span check needs lambda >= 2"));
    }
    if let Some(k) = p_prime.lengths.iter().find(|&&k| k < lambda) {
        return Err(Error::invalid(format!("length {k} is below lambda = {lambda}")));
    }
    let set = p_prime.expand()?;
    let mut lhs = set.clone();
    let mut power = set.clone();
    for _ in 0..d {
        power = dilate(&power, lambda as i64);
        lhs = sumset_auto(&lhs, &power)?;
    }
    let fold = lambda.checked_pow(d).ok_or(Error::Overflow("lambda^d"))?;
    let rhs = iterated_sumset(&set, fold)?;
    let modulus = p_prime.modulus as usize;
    let cauchy_davenport = is_prime(p_prime.modulus).then(|| {
        let floor = (fold as u128 * set.len() as u128 - fold as u128 + 1).min(modulus as u128);
        IneqReport::new(
            "iterated_cauchy_davenport",
            Sense::LowerBound,
            rhs.len(),
            from_int(floor),
            None,
            &format!("{p_prime}|lambda={lambda};d={d}"),
        )
    });
    Ok(SpanReport {
        lambda,
        exponent: d,
        lhs_size: lhs.len(),
        rhs_size: rhs.len(),
        contained: rhs.is_subset(&lhs),
        rhs_is_full: rhs.len() == modulus,
        cauchy_davenport,
    })
}

/// Orders candidates: larger nominal size, then smaller dimension, then smaller `(a, v, k)`.
fn better(a: &Gap, b: &Gap) -> bool {
    b.nominal_size()
        .cmp(&a.nominal_size())
        .then(a.dimension().cmp(&b.dimension()))
        .then_with(|| a.tuple_cmp(b))
        .is_lt()
}

fn pick(a: Option<Gap>, b: Option<Gap>) -> Option<Gap> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if better(&b, &a) { b } else { a }),
        (a, b) => a.or(b),
    }
}

/// Brute-force search for a maximum proper GAP of dimension ≤ `d_max` inside `s`.
///
/// Every base in `s` is tried, which amounts to searching base-0 GAPs in each
/// translate of `s`. Ties go to the smaller dimension, then to the
/// lexicographically least `(a, v, k)`.
pub fn find_max_proper_gap(s: &ResidueSet, d_max: usize) -> Result<Gap> {
    let p = s.modulus() as u64;
    if p > FINDER_MAX_MODULUS {
        return Err(Error::cap("GAP finder modulus", p, FINDER_MAX_MODULUS));
    }
    if d_max > FINDER_MAX_DIM {
        return Err(Error::cap("GAP finder dimension", d_max as u64, FINDER_MAX_DIM as u64));
    }
    if d_max == 0 {
        return Err(Error::invalid("GAP finder needs d_max >= 1"));
    }
    if s.is_empty() {
        return Err(Error::EmptySet("no GAP fits in an empty set"));
    }
    let n = p as usize;
    let members: Vec<usize> = s.to_vec();
    let order = |v: usize| n / v.gcd(&n);
    // run[v][x]: length of the progression x, x+v, ... inside s, capped at ord(v).
    let run: Vec<Vec<u64>> = (0..n)
        .map(|v| {
            (0..n)
                .map(|x| {
                    if v == 0 {
                        return u64::from(s.contains(x));
                    }
                    let cap = order(v);
                    let mut len = 0;
                    let mut y = x;
                    while len < cap && s.contains(y) {
                        len += 1;
                        y = (y + v) % n;
                    }
                    len as u64
                })
                .collect()
        })
        .collect();

    let mut best: Option<Gap> = None;
    for &a in &members {
        for (v, row) in run.iter().enumerate().skip(1) {
            let k = row[a];
            if k >= 1 {
                let cand = Gap::new(p, a as u64, vec![v as u64], vec![k])?;
                best = pick(best, Some(cand));
            }
        }
    }
    if p == 1 {
        best = Some(Gap::new(1, 0, vec![0], vec![1])?);
    }
    let mut best = best.expect("nonempty set has a singleton GAP");
    if d_max < 2 || best.nominal_size() >= members.len() as u128 {
        return Ok(best);
    }

    let floor = best.nominal_size();
    let found = (1..n)
        .into_par_iter()
        .map(|v1| {
            let mut local: Option<Gap> = None;
            let mut seen = vec![false; n];
            for v2 in 1..n {
                for &a in &members {
                    let row_len = run[v1][a];
                    for k1 in 2..=row_len {
                        let target = local.as_ref().map_or(floor, |g| g.nominal_size().max(floor));
                        // Rows a + j·v2 must each hold k1 steps of v1.
                        let mut k2_max = 0u64;
                        let mut x = a;
                        while k2_max < n as u64 && run[v1][x] >= k1 {
                            k2_max += 1;
                            x = (x + v2) % n;
                        }
                        k2_max = k2_max.min(p / k1);
                        if (k1 * k2_max) as u128 <= floor || ((k1 * k2_max) as u128) < target {
                            continue;
                        }
                        for k2 in (2..=k2_max).rev() {
                            if ((k1 * k2) as u128) < target || (k1 * k2) as u128 <= floor {
                                break;
                            }
                            if proper_2d(v1, k1, v2, k2, n, &mut seen) {
                                let cand = Gap::new(p, a as u64, vec![v1 as u64, v2 as u64], vec![k1, k2])
                                    .expect("residues in range");
                                local = pick(local, Some(cand));
                                break;
                            }
                        }
                    }
                }
            }
            local
        })
        .reduce(|| None, pick);
    if let Some(g) = found {
        if better(&g, &best) {
            best = g;
        }
    }
    Ok(best)
}

fn proper_2d(v1: usize, k1: u64, v2: usize, k2: u64, n: usize, seen: &mut [bool]) -> bool {
    seen.iter_mut().for_each(|x| *x = false);
    for j in 0..k2 as usize {
        for i in 0..k1 as usize {
            let x = (i * v1 + j * v2) % n;
            if seen[x] {
                return false;
            }
            seen[x] = true;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gap(p: u64, a: u64, v: &[u64], k: &[u64]) -> Gap {
        Gap::new(p, a, v.to_vec(), k.to_vec()).unwrap()
    }

    fn set(n: usize, xs: &[u64]) -> ResidueSet {
        ResidueSet::from_elements(n, xs.iter().copied()).unwrap()
    }

    // Oracle: enumerate every coefficient vector.
    fn expand_oracle(g: &Gap) -> Vec<u64> {
        let mut out = vec![g.base()];
        for (&v, &k) in g.generators().iter().zip(g.lengths()) {
            out = out
                .iter()
                .flat_map(|&x| (0..k).map(move |j| (x + j * v) % g.modulus()))
                .collect();
        }
        out
    }

    #[test]
    fn expand_examples() {
        assert_eq!(gap(11, 0, &[2], &[3]).expand().unwrap(), set(11, &[0, 2, 4]));
        assert_eq!(gap(7, 0, &[1, 2], &[2, 2]).expand().unwrap(), set(7, &[0, 1, 2, 3]));
        let collide = gap(5, 0, &[1, 2], &[3, 2]);
        assert_eq!(collide.expand().unwrap(), ResidueSet::full(5));
        assert_eq!(collide.nominal_size(), 6);
        let huge = gap(101, 0, &[1, 2, 3], &[1000, 1000, 1000]);
        assert!(matches!(huge.expand(), Err(Error::ScaleCap { .. })));
    }

    #[test]
    fn properness_examples() {
        for v in 1..13 {
            assert!(gap(13, 4, &[v], &[13]).is_proper().unwrap());
        }
        assert!(!gap(5, 0, &[1, 2], &[3, 2]).is_proper().unwrap());
        assert!(gap(5, 3, &[1, 2, 4], &[1, 1, 1]).is_proper().unwrap());
        assert!(gap(11, 0, &[0], &[3]).is_degenerate());
        assert!(!gap(11, 0, &[0], &[3]).is_proper().unwrap());
        assert!(!gap(11, 0, &[0], &[1]).is_degenerate());
    }

    #[test]
    fn truncation_examples() {
        let t = truncate_to_large_steps(&gap(101, 7, &[3, 5], &[5, 2]), 3).unwrap();
        assert_eq!(t.gap, gap(101, 0, &[3], &[5]));
        assert_eq!(t.kept, 1);
        let t = truncate_to_large_steps(&gap(101, 0, &[3, 5], &[5, 5]), 3).unwrap();
        assert_eq!(t.gap, gap(101, 0, &[3, 5], &[5, 5]));
        // Sorting records the permutation.
        let t = truncate_to_large_steps(&gap(101, 0, &[3, 5, 9], &[2, 6, 4]), 3).unwrap();
        assert_eq!(t.order, vec![1, 2, 0]);
        assert_eq!(t.gap, gap(101, 0, &[5, 9], &[6, 4]));
        assert!(truncate_to_large_steps(&gap(101, 0, &[3], &[2]), 3).is_err());

        let p = gap(11, 0, &[1, 5], &[4, 2]);
        assert!(p.is_proper().unwrap());
        assert_eq!(p.expand().unwrap().len(), 8);
        let t = truncate_to_large_steps(&p, 3).unwrap();
        let pp = t.gap.expand().unwrap();
        assert_eq!(pp, set(11, &[0, 1, 2, 3]));
        // |P'| ≥ |P| / λ^{d-m}
        assert!(pp.len() as u64 * 3 >= 8);
    }

    #[test]
    fn span_examples() {
        let p = gap(13, 0, &[1], &[4]);
        let r = lambda_span_check(&p, 3, 0).unwrap();
        assert!(r.contained);
        assert_eq!(r.lhs_size, r.rhs_size);
        let r = lambda_span_check(&p, 3, 1).unwrap();
        assert_eq!(r.rhs_size, 10);
        assert_eq!(r.lhs_size, 13);
        assert!(r.contained && !r.rhs_is_full);
        assert!(r.cauchy_davenport.unwrap().holds);
        assert!(lambda_span_check(&gap(13, 0, &[1], &[2]), 3, 1).is_err());
        assert!(lambda_span_check(&gap(13, 1, &[1], &[4]), 3, 1).is_err());
    }

    #[test]
    fn finder_examples() {
        let full = find_max_proper_gap(&ResidueSet::full(13), 2).unwrap();
        assert_eq!(full, gap(13, 0, &[1], &[13]));
        let evens = find_max_proper_gap(&set(11, &[0, 2, 4, 6]), 2).unwrap();
        assert_eq!(evens, gap(11, 0, &[2], &[4]));
        let single = find_max_proper_gap(&set(11, &[5]), 2).unwrap();
        assert_eq!(single.nominal_size(), 1);
        assert_eq!(single.base(), 5);
        assert!(find_max_proper_gap(&set(11, &[]), 2).is_err());
        assert!(matches!(find_max_proper_gap(&ResidueSet::full(103), 1), Err(Error::ScaleCap { .. })));
        assert!(matches!(find_max_proper_gap(&ResidueSet::full(13), 3), Err(Error::ScaleCap { .. })));
    }

    #[test]
    fn finder_recovers_planted_grid() {
        // {0,1,2,3} + {0,20,40}: proper, 12 elements, no AP of that length.
        let planted = gap(101, 0, &[1, 20], &[4, 3]);
        let mut s = planted.expand().unwrap();
        s.insert(77);
        s.insert(90);
        let found = find_max_proper_gap(&s, 2).unwrap();
        assert!(found.nominal_size() >= 12);
        assert!(found.is_proper().unwrap());
        assert!(found.expand().unwrap().is_subset(&s));
    }

    #[test]
    fn text_format() {
        let g: Gap = "p=11;a=3;v=[1,5];k=[4,2]".parse().unwrap();
        assert_eq!(g, gap(11, 3, &[1, 5], &[4, 2]));
        assert_eq!(g.to_string(), "p=11;a=3;v=[1,5];k=[4,2]");
        assert!("p=11;a=3;v=[1];k=[4,2]".parse::<Gap>().is_err());
        assert!("p=11;a=11;v=[1];k=[4]".parse::<Gap>().is_err());
        assert!("p=11;a=3;v=[1]".parse::<Gap>().is_err());
    }

    fn arb_gap() -> impl Strategy<Value = Gap> {
        (2u64..60, 0usize..=3).prop_flat_map(|(p, d)| {
            (
                0..p,
                prop::collection::vec(0..p, d),
                prop::collection::vec(1u64..6, d),
            )
                .prop_map(move |(a, v, k)| Gap::new(p, a, v, k).unwrap())
        })
    }

    proptest! {
        #[test]
        fn expand_matches_oracle(g in arb_gap()) {
            let mut want = expand_oracle(&g);
            want.sort_unstable();
            want.dedup();
            let got: Vec<u64> = g.expand().unwrap().iter().map(|x| x as u64).collect();
            prop_assert_eq!(&got, &want);
            prop_assert!(got.len() as u128 <= g.nominal_size());
            prop_assert_eq!(g.is_proper().unwrap(), got.len() as u128 == g.nominal_size());
        }

        #[test]
        fn translation_shifts_expansion(g in arb_gap(), shift in 0u64..60) {
            let t = shift % g.modulus();
            let moved = g.with_base((g.base() + t) % g.modulus()).unwrap();
            let want = crate::zp_core::translate(&g.expand().unwrap(), t as i64);
            prop_assert_eq!(moved.expand().unwrap(), want);
        }

        #[test]
        fn properness_invariant_under_symmetries(g in arb_gap(), u in 1u64..60) {
            let p = g.modulus();
            prop_assume!(u % p != 0 && u.gcd(&p) == 1);
            let proper = g.is_proper().unwrap();
            let mut v = g.generators().to_vec();
            let mut k = g.lengths().to_vec();
            v.reverse();
            k.reverse();
            prop_assert_eq!(Gap::new(p, g.base(), v, k).unwrap().is_proper().unwrap(), proper);
            let scaled = g.generators().iter().map(|&x| x * u % p).collect();
            prop_assert_eq!(Gap::new(p, g.base(), scaled, g.lengths().to_vec()).unwrap().is_proper().unwrap(), proper);
        }

        #[test]
        fn span_contains_iterated_sum(p in prop::sample::select(vec![13u64, 17, 31, 61, 101]),
                                      v in 1u64..100, lambda in 2u64..5, extra in 0u64..4, d in 0u32..3) {
            let k = (lambda + extra).min(p);
            prop_assume!(k >= lambda);
            let g = Gap::new(p, 0, vec![v % p], vec![k]).unwrap();
            prop_assume!(g.generators()[0] != 0);
            let r = lambda_span_check(&g, lambda, d).unwrap();
            prop_assert!(r.contained);
            prop_assert!(r.cauchy_davenport.unwrap().holds);
        }
    }
}
