use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub(crate) const WORD: usize = 64;

pub(crate) fn word_count(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// A subset of Z/NZ stored as a membership bitvector.
///
/// Values are immutable once built; the only mutating methods are used while
/// constructing a set.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ResidueSet {
    modulus: usize,
    words: Vec<u64>,
}

impl ResidueSet {
    pub fn empty(modulus: usize) -> Self {
        assert!(modulus >= 1, "modulus must be positive");
        ResidueSet {
            modulus,
            words: vec![0; word_count(modulus)],
        }
    }

    pub fn full(modulus: usize) -> Self {
        let mut set = Self::empty(modulus);
        set.words.iter_mut().for_each(|w| *w = !0);
        set.mask_tail();
        set
    }

    /// Builds a set from residues that must already lie in `[0, N)`.
    pub fn from_elements<I>(modulus: usize, elements: I) -> Result<Self>
    where
        I: IntoIterator<Item = u64>,
    {
        if modulus == 0 {
            return Err(Error::invalid("modulus must be positive"));
        }
        let mut set = Self::empty(modulus);
        for e in elements {
            if e >= modulus as u64 {
                return Err(Error::ResidueOutOfRange {
                    value: e,
                    modulus: modulus as u64,
                });
            }
            set.insert(e as usize);
        }
        Ok(set)
    }

    /// Builds a set from arbitrary integers, reducing each modulo N.
    pub fn from_integers<I>(modulus: usize, elements: I) -> Self
    where
        I: IntoIterator<Item = i64>,
    {
        let mut set = Self::empty(modulus);
        for e in elements {
            set.insert(e.rem_euclid(modulus as i64) as usize);
        }
        set
    }

    /// The interval `{start, start+1, ..., start+len-1}` reduced mod N.
    pub fn interval(modulus: usize, start: usize, len: usize) -> Self {
        let mut set = Self::empty(modulus);
        for i in 0..len.min(modulus) {
            set.insert((start + i) % modulus);
        }
        set
    }

    pub(crate) fn from_words(modulus: usize, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), word_count(modulus));
        let mut set = ResidueSet { modulus, words };
        set.mask_tail();
        set
    }

    fn mask_tail(&mut self) {
        let rem = self.modulus % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn insert(&mut self, x: usize) {
        debug_assert!(x < self.modulus);
        self.words[x / WORD] |= 1 << (x % WORD);
    }

    pub fn remove(&mut self, x: usize) {
        self.words[x / WORD] &= !(1 << (x % WORD));
    }

    pub fn contains(&self, x: usize) -> bool {
        x < self.modulus && (self.words[x / WORD] >> (x % WORD)) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.modulus
    }

    /// Ascending iterator over members.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * WORD + bit)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn max_element(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, &w)| i * WORD + 63 - w.leading_zeros() as usize)
    }

    pub fn union(&self, other: &ResidueSet) -> Result<ResidueSet> {
        self.check_modulus(other)?;
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        Ok(ResidueSet::from_words(self.modulus, words))
    }

    pub fn intersection(&self, other: &ResidueSet) -> Result<ResidueSet> {
        self.check_modulus(other)?;
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        Ok(ResidueSet::from_words(self.modulus, words))
    }

    pub fn is_subset(&self, other: &ResidueSet) -> bool {
        self.modulus == other.modulus
            && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub(crate) fn check_modulus(&self, other: &ResidueSet) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch {
                left: self.modulus as u64,
                right: other.modulus as u64,
            });
        }
        Ok(())
    }

    /// Order used by canonicalization: at the first residue where the two
    /// sets differ, the set containing it is the smaller one. For sets of
    /// equal size this is lexicographic order on the ascending element lists.
    pub fn lex_cmp(&self, other: &ResidueSet) -> Ordering {
        for (a, b) in self.words.iter().zip(&other.words) {
            let diff = a ^ b;
            if diff != 0 {
                let low = diff & diff.wrapping_neg();
                return if a & low != 0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                };
            }
        }
        self.words.len().cmp(&other.words.len())
    }
}

impl PartialOrd for ResidueSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ResidueSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.modulus
            .cmp(&other.modulus)
            .then_with(|| self.lex_cmp(other))
    }
}

impl fmt::Debug for ResidueSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `p=<N>;{a1,a2,...}` with ascending residues.
impl fmt::Display for ResidueSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={};{{", self.modulus)?;
        for (i, x) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str("}")
    }
}

impl FromStr for ResidueSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("{why} in set literal {s:?}"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let rest = compact.strip_prefix("p=").ok_or_else(|| bad("missing `p=`"))?;
        let (modulus, body) = rest.split_once(';').ok_or_else(|| bad("missing `;`"))?;
        let modulus: usize = modulus.parse().map_err(|_| bad("bad modulus"))?;
        if modulus == 0 {
            return Err(bad("zero modulus"));
        }
        let body = body
            .strip_prefix('{')
            .and_then(|b| b.strip_suffix('}'))
            .ok_or_else(|| bad("missing braces"))?;
        let mut set = ResidueSet::empty(modulus);
        let mut prev: Option<u64> = None;
        if !body.is_empty() {
            for tok in body.split(',') {
                let x: u64 = tok.parse().map_err(|_| bad("bad residue"))?;
                if prev.is_some_and(|p| p >= x) {
                    return Err(bad("residues not strictly ascending"));
                }
                if x >= modulus as u64 {
                    return Err(Error::ResidueOutOfRange {
                        value: x,
                        modulus: modulus as u64,
                    });
                }
                set.insert(x as usize);
                prev = Some(x);
            }
        }
        Ok(set)
    }
}

impl Serialize for ResidueSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ResidueSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
