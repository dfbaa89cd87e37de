//! The three sumset kernels: pairwise enumeration, shifted-OR accumulation
//! over bit words, and exact number-theoretic convolution.

use serde::{Deserialize, Serialize};

use super::residue_set::{word_count, ResidueSet, WORD};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Naive,
    Bitshift,
    Convolution,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [Kernel::Naive, Kernel::Bitshift, Kernel::Convolution];

    /// Picks the kernel with the lower estimated cost. The bitshift kernel
    /// costs about `min(|A|,|B|) * ceil(N/64)` word operations; the transform
    /// costs about `N log N`, and only pays off for large moduli.
    pub fn auto(a: &ResidueSet, b: &ResidueSet) -> Kernel {
        let n = a.modulus();
        if n < CONVOLUTION_MIN_MODULUS || 2 * n > NTT_MAX_LEN {
            return Kernel::Bitshift;
        }
        let shifts = a.len().min(b.len());
        let log_n = usize::BITS - n.leading_zeros();
        if shifts * word_count(n) > 8 * n * log_n as usize {
            Kernel::Convolution
        } else {
            Kernel::Bitshift
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Kernel::Naive),
            "bitshift" => Ok(Kernel::Bitshift),
            "convolution" => Ok(Kernel::Convolution),
            _ => Err(Error::Parse(format!("unknown kernel {s:?}"))),
        }
    }
}

pub(crate) const CONVOLUTION_MIN_MODULUS: usize = 1 << 14;

pub(crate) fn naive(a: &ResidueSet, b: &ResidueSet) -> ResidueSet {
    let n = a.modulus();
    let mut out = ResidueSet::empty(n);
    let bs: Vec<usize> = b.iter().collect();
    for x in a.iter() {
        for &y in &bs {
            let s = x + y;
            out.insert(if s >= n { s - n } else { s });
        }
    }
    out
}

/// ORs `src << shift` into `acc`, where `acc` is long enough to hold the result.
fn or_shifted(acc: &mut [u64], src: &[u64], shift: usize) {
    let (w, s) = (shift / WORD, shift % WORD);
    if s == 0 {
        for (dst, &x) in acc[w..].iter_mut().zip(src) {
            *dst |= x;
        }
    } else {
        for (j, &x) in src.iter().enumerate() {
            acc[w + j] |= x << s;
            acc[w + j + 1] |= x >> (WORD - s);
        }
    }
}

/// Bits `[start, start + words*64)` of `acc` packed into words.
fn extract(acc: &[u64], start: usize, words: usize) -> Vec<u64> {
    let (w, s) = (start / WORD, start % WORD);
    (0..words)
        .map(|j| {
            let lo = acc.get(w + j).copied().unwrap_or(0);
            if s == 0 {
                lo
            } else {
                let hi = acc.get(w + j + 1).copied().unwrap_or(0);
                (lo >> s) | (hi << (WORD - s))
            }
        })
        .collect()
}

/// Folds a linear bit accumulator of length `< 2n` onto Z/nZ.
fn fold_cyclic(acc: &[u64], n: usize) -> Vec<u64> {
    let words = word_count(n);
    let mut low = acc[..words].to_vec();
    if !n.is_multiple_of(WORD) {
        low[words - 1] &= (1u64 << (n % WORD)) - 1;
    }
    for (l, h) in low.iter_mut().zip(extract(acc, n, words)) {
        *l |= h;
    }
    low
}

pub(crate) fn bitshift(a: &ResidueSet, b: &ResidueSet) -> ResidueSet {
    let n = a.modulus();
    // Shift the larger set by each member of the smaller one.
    let (big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let words = word_count(n);
    let mut acc = vec![0u64; 2 * words + 2];
    for shift in small.iter() {
        or_shifted(&mut acc, big.words(), shift);
    }
    ResidueSet::from_words(n, fold_cyclic(&acc, n))
}

pub(crate) fn convolution(a: &ResidueSet, b: &ResidueSet) -> Result<ResidueSet> {
    let n = a.modulus();
    let mut fa = vec![false; n];
    let mut fb = vec![false; n];
    a.iter().for_each(|x| fa[x] = true);
    b.iter().for_each(|x| fb[x] = true);
    let support = convolve_support(&fa, &fb)?;
    let mut out = ResidueSet::empty(n);
    for (i, &hit) in support.iter().enumerate() {
        if hit {
            out.insert(i % n);
        }
    }
    Ok(out)
}

const NTT_PRIME: u64 = 998_244_353;
const NTT_ROOT: u64 = 3;
/// Largest transform length supported by `NTT_PRIME` (2^23 divides p - 1).
pub const NTT_MAX_LEN: usize = 1 << 23;

fn pow_mod(mut b: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % NTT_PRIME;
        }
        b = b * b % NTT_PRIME;
        e >>= 1;
    }
    r
}

fn ntt(a: &mut [u64], invert: bool) {
    let n = a.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j ^= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let mut w_len = pow_mod(NTT_ROOT, (NTT_PRIME - 1) / len as u64);
        if invert {
            w_len = pow_mod(w_len, NTT_PRIME - 2);
        }
        for chunk in a.chunks_mut(len) {
            let mut w = 1;
            let (lo, hi) = chunk.split_at_mut(len / 2);
            for (u, v) in lo.iter_mut().zip(hi.iter_mut()) {
                let x = *u;
                let y = *v * w % NTT_PRIME;
                *u = if x + y >= NTT_PRIME { x + y - NTT_PRIME } else { x + y };
                *v = if x >= y { x - y } else { x + NTT_PRIME - y };
                w = w * w_len % NTT_PRIME;
            }
        }
        len <<= 1;
    }
    if invert {
        let inv_n = pow_mod(n as u64, NTT_PRIME - 2);
        a.iter_mut().for_each(|x| *x = *x * inv_n % NTT_PRIME);
    }
}

/// Support of the linear convolution of two 0/1 sequences.
///
/// Counts are bounded by `min(len)` which stays below the transform prime,
/// so a residue is nonzero exactly when the true count is.
pub fn convolve_support(a: &[bool], b: &[bool]) -> Result<Vec<bool>> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let out_len = a.len() + b.len() - 1;
    let size = out_len.next_power_of_two();
    if size > NTT_MAX_LEN {
        return Err(Error::cap("convolution length", size as u128, NTT_MAX_LEN as u128));
    }
    let mut fa = vec![0u64; size];
    let mut fb = vec![0u64; size];
    for (dst, &x) in fa.iter_mut().zip(a) {
        *dst = x as u64;
    }
    for (dst, &x) in fb.iter_mut().zip(b) {
        *dst = x as u64;
    }
    ntt(&mut fa, false);
    ntt(&mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = *x * y % NTT_PRIME;
    }
    ntt(&mut fa, true);
    Ok(fa[..out_len].iter().map(|&c| c != 0).collect())
}
