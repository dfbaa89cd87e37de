//! Checkable oracles for the inequalities used in the dilate-sum arguments.
//!
//! Each check computes both sides exactly. They are theorems, so `holds`
//! must always come out true; a failure points at a sumset kernel bug.

pub mod suites;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use crate::rational::{format_exact, from_int, Rational};
use crate::zp_core::{
    dilate, dilate_sum, iterated_sumset, kfold_dilate_sum, negate, require_prime, sumset_auto, Kernel,
    ResidueSet,
};

/// Direction of a checked inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `lhs ≤ rhs`; slack is `rhs - lhs`.
    UpperBound,
    /// `lhs ≥ rhs`; slack is `lhs - rhs`.
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IneqReport {
    pub inequality: String,
    pub lhs: BigInt,
    pub rhs: Rational,
    /// Doubling constant, where the inequality has one.
    pub k: Option<Rational>,
    pub holds: bool,
    pub slack: Rational,
    pub inputs_digest: String,
}

impl IneqReport {
    pub(crate) fn new(inequality: &str, sense: Sense, lhs: usize, rhs: Rational, k: Option<Rational>, inputs: &str) -> Self {
        let lhs = BigInt::from(lhs);
        let slack = match sense {
            Sense::UpperBound => &rhs - from_int(lhs.clone()),
            Sense::LowerBound => from_int(lhs.clone()) - &rhs,
        };
        IneqReport {
            inequality: inequality.to_string(),
            holds: !slack.is_negative(),
            lhs,
            rhs,
            k,
            slack,
            inputs_digest: sha256_hex(inputs),
        }
    }
}

impl Serialize for IneqReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(7))?;
        map.serialize_entry("inequality", &self.inequality)?;
        map.serialize_entry("lhs", &self.lhs.to_string())?;
        map.serialize_entry("rhs", &format_exact(&self.rhs))?;
        map.serialize_entry("K", &self.k.as_ref().map(format_exact))?;
        map.serialize_entry("holds", &self.holds)?;
        map.serialize_entry("slack", &format_exact(&self.slack))?;
        map.serialize_entry("inputs_digest", &self.inputs_digest)?;
        map.end()
    }
}

fn require_nonempty(sets: &[&ResidueSet], what: &'static str) -> Result<()> {
    if sets.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptySet(what));
    }
    Ok(())
}

fn same_modulus(sets: &[&ResidueSet]) -> Result<()> {
    for pair in sets.windows(2) {
        if pair[0].modulus() != pair[1].modulus() {
            return Err(Error::ModulusMismatch {
                left: pair[0].modulus() as u64,
                right: pair[1].modulus() as u64,
            });
        }
    }
    Ok(())
}

fn inputs_key(sets: &[&ResidueSet], params: &str) -> String {
    let mut key: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
    key.push(params.to_string());
    key.join("|")
}

/// `|A + B| ≥ min(|A| + |B| - 1, p)` for nonempty A, B in Z/pZ.
pub fn check_cauchy_davenport(a: &ResidueSet, b: &ResidueSet) -> Result<IneqReport> {
    same_modulus(&[a, b])?;
    require_prime(a.modulus())?;
    require_nonempty(&[a, b], "Cauchy-Davenport needs nonempty sets")?;
    let lhs = sumset_auto(a, b)?.len();
    let rhs = (a.len() + b.len() - 1).min(a.modulus());
    Ok(IneqReport::new(
        "cauchy_davenport",
        Sense::LowerBound,
        lhs,
        from_int(rhs),
        None,
        &inputs_key(&[a, b], ""),
    ))
}

/// `|X| |Y + Z| ≤ |X + Y| |X + Z|`.
pub fn check_ruzsa_triangle(x: &ResidueSet, y: &ResidueSet, z: &ResidueSet) -> Result<IneqReport> {
    same_modulus(&[x, y, z])?;
    require_nonempty(&[x, y, z], "Ruzsa triangle inequality needs nonempty sets")?;
    let lhs = x.len() * sumset_auto(y, z)?.len();
    let rhs = sumset_auto(x, y)?.len() * sumset_auto(x, z)?.len();
    Ok(IneqReport::new(
        "ruzsa_triangle",
        Sense::UpperBound,
        lhs,
        from_int(rhs),
        None,
        &inputs_key(&[x, y, z], ""),
    ))
}

fn require_headroom(modulus: usize, max_reach: u128) -> Result<()> {
    if modulus as u128 <= max_reach {
        return Err(Error::Headroom {
            needed: max_reach,
            modulus: modulus as u64,
        });
    }
    Ok(())
}

fn multiple(b: &ResidueSet, m: u32) -> Result<ResidueSet> {
    if m == 0 {
        Ok(ResidueSet::from_elements(b.modulus(), [0]).expect("0 < N"))
    } else {
        iterated_sumset(b, m as u64)
    }
}

/// `|A + B| ≤ K|A|` implies `|mB - nB| ≤ K^{m+n} |A|`, with K taken minimal.
///
/// Sets are read as integer sets in `[0, N)`; N must leave room for every
/// element of `A + B` and `mB - nB` without wrapping.
pub fn check_plunnecke(a: &ResidueSet, b: &ResidueSet, m: u32, n: u32) -> Result<IneqReport> {
    same_modulus(&[a, b])?;
    require_nonempty(&[a, b], "Plunnecke-Ruzsa needs nonempty sets")?;
    if m + n == 0 {
        return Err(Error::invalid("Plunnecke-Ruzsa needs m + n >= 1"));
    }
    let (max_a, max_b) = (a.max_element().unwrap() as u128, b.max_element().unwrap() as u128);
    require_headroom(a.modulus(), (max_a + max_b).max((m + n) as u128 * max_b))?;
    let k = Rational::new(BigInt::from(sumset_auto(a, b)?.len()), BigInt::from(a.len()));
    let lhs = sumset_auto(&multiple(b, m)?, &negate(&multiple(b, n)?))?.len();
    let rhs = k.pow((m + n) as i32) * from_int(a.len());
    Ok(IneqReport::new(
        "plunnecke_ruzsa",
        Sense::UpperBound,
        lhs,
        rhs,
        Some(k),
        &inputs_key(&[a, b], &format!("m={m};n={n}")),
    ))
}

/// The dilate-chain bound together with the two intermediate steps of its proof.
#[derive(Debug, Clone, Serialize)]
pub struct DilateChainReport {
    /// `|B + λ·B + ... + λ^l·B| ≤ K^{7l-6} |B|`.
    pub chain: IneqReport,
    /// `|B + B| ≤ K² |B|`.
    pub doubling: IneqReport,
    /// `|B + B + λ·B| ≤ K⁷ |B|`.
    pub mixed: IneqReport,
}

impl DilateChainReport {
    pub fn holds(&self) -> bool {
        self.chain.holds && self.doubling.holds && self.mixed.holds
    }
}

/// Checks `|Σ_{i=0}^{l} λ^i·B| ≤ K^{7l-6} |B|` where `K = |B + λ·B| / |B|`.
pub fn check_dilate_chain(b: &ResidueSet, lambda: i64, l: u32) -> Result<DilateChainReport> {
    if lambda < 2 || l < 1 {
        return Err(Error::invalid(format!("dilate chain needs lambda >= 2 and l >= 1, got {lambda}, {l}")));
    }
    require_nonempty(&[b], "dilate chain needs a nonempty set")?;
    let max_b = b.max_element().unwrap() as u128;
    let lam = lambda as u128;
    let geometric = (0..=l).try_fold(0u128, |acc, i| lam.checked_pow(i).and_then(|p| acc.checked_add(p)));
    let geometric = geometric.ok_or(Error::Overflow("dilate chain headroom"))?;
    require_headroom(b.modulus(), max_b * geometric.max(lam + 2))?;

    let size = b.len();
    let k = Rational::new(BigInt::from(dilate_sum(b, lambda, Kernel::auto(b, b)).len()), BigInt::from(size));
    let key = inputs_key(&[b], &format!("lambda={lambda};l={l}"));

    let mut chain = b.clone();
    let mut power = b.clone();
    for _ in 0..l {
        power = dilate(&power, lambda);
        chain = sumset_auto(&chain, &power)?;
    }
    let scaled = |e: i32| k.pow(e) * from_int(size);
    let double = sumset_auto(b, b)?;
    let mixed = sumset_auto(&double, &dilate(b, lambda))?;
    Ok(DilateChainReport {
        chain: IneqReport::new("dilate_chain", Sense::UpperBound, chain.len(), scaled(7 * l as i32 - 6), Some(k.clone()), &key),
        doubling: IneqReport::new("dilate_chain_doubling", Sense::UpperBound, double.len(), scaled(2), Some(k.clone()), &key),
        mixed: IneqReport::new("dilate_chain_mixed", Sense::UpperBound, mixed.len(), scaled(7), Some(k.clone()), &key),
    })
}

/// `|(k-1)A + λ·A| ≥ min(p, |A + λ·A| + (k-2)(|A| - 1))`, by repeated Cauchy-Davenport.
pub fn check_kfold_cd_chain(a: &ResidueSet, k: u32, lambda: i64) -> Result<IneqReport> {
    require_prime(a.modulus())?;
    require_nonempty(&[a], "k-fold chain needs a nonempty set")?;
    let kernel = Kernel::auto(a, a);
    let lhs = kfold_dilate_sum(a, k, lambda, kernel)?.len();
    let base = dilate_sum(a, lambda, kernel).len();
    let rhs = (base + (k as usize - 2) * (a.len() - 1)).min(a.modulus());
    Ok(IneqReport::new(
        "kfold_cd_chain",
        Sense::LowerBound,
        lhs,
        from_int(rhs),
        None,
        &inputs_key(&[a], &format!("k={k};lambda={lambda}")),
    ))
}

impl IneqReport {
    pub fn is_tight(&self) -> bool {
        self.slack.is_zero()
    }
}
