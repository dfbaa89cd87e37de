//! Exact set arithmetic in Z/NZ.
//!
//! Every operation is a pure function of its inputs. Sumsets can be routed
//! through any [`Kernel`]; all kernels return bit-identical results.

mod kernel;
mod residue_set;

pub use kernel::{convolve_support, Kernel, NTT_MAX_LEN};
pub use residue_set::ResidueSet;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::prime::is_prime;

/// `A + B = {a + b mod N}`.
pub fn sumset(a: &ResidueSet, b: &ResidueSet, kernel: Kernel) -> Result<ResidueSet> {
    a.check_modulus(b)?;
    if a.is_empty() || b.is_empty() {
        return Ok(ResidueSet::empty(a.modulus()));
    }
    match kernel {
        Kernel::Naive => Ok(kernel::naive(a, b)),
        Kernel::Bitshift => Ok(kernel::bitshift(a, b)),
        Kernel::Convolution => kernel::convolution(a, b),
    }
}

/// [`sumset`] with the kernel chosen by [`Kernel::auto`].
pub fn sumset_auto(a: &ResidueSet, b: &ResidueSet) -> Result<ResidueSet> {
    sumset(a, b, Kernel::auto(a, b))
}

fn reduce(x: i64, n: usize) -> u64 {
    x.rem_euclid(n as i64) as u64
}

/// `λ·A = {λa mod N}`.
pub fn dilate(a: &ResidueSet, lambda: i64) -> ResidueSet {
    let n = a.modulus();
    let l = reduce(lambda, n) as u128;
    let mut out = ResidueSet::empty(n);
    for x in a.iter() {
        out.insert((l * x as u128 % n as u128) as usize);
    }
    out
}

/// `-A`.
pub fn negate(a: &ResidueSet) -> ResidueSet {
    dilate(a, -1)
}

/// `A + v`.
pub fn translate(a: &ResidueSet, v: i64) -> ResidueSet {
    let n = a.modulus();
    let v = reduce(v, n) as usize;
    let mut out = ResidueSet::empty(n);
    for x in a.iter() {
        out.insert((x + v) % n);
    }
    out
}

/// `A + λ·A`.
pub fn dilate_sum(a: &ResidueSet, lambda: i64, kernel: Kernel) -> ResidueSet {
    sumset(a, &dilate(a, lambda), kernel).expect("moduli agree")
}

/// `(k-1)A + λ·A`; for `k = 2` this is [`dilate_sum`].
pub fn kfold_dilate_sum(a: &ResidueSet, k: u32, lambda: i64, kernel: Kernel) -> Result<ResidueSet> {
    if k < 2 {
        return Err(Error::invalid(format!("k-fold dilate sum needs k >= 2, got {k}")));
    }
    let base = iterated_sumset_with(a, (k - 1) as u64, kernel)?;
    sumset(&base, &dilate(a, lambda), kernel)
}

/// The m-fold sumset `mA`, computed by repeated doubling.
pub fn iterated_sumset(a: &ResidueSet, m: u64) -> Result<ResidueSet> {
    if m < 1 {
        return Err(Error::invalid("iterated sumset needs m >= 1"));
    }
    let mut acc: Option<ResidueSet> = None;
    let mut power = a.clone();
    let mut m = m;
    loop {
        if m & 1 == 1 {
            acc = Some(match acc {
                None => power.clone(),
                Some(acc) => sumset_auto(&acc, &power)?,
            });
        }
        m >>= 1;
        // Once a partial sum is the full group, further additions are absorbed.
        if m == 0 || acc.as_ref().is_some_and(|s| s.is_full()) {
            break;
        }
        power = sumset_auto(&power, &power)?;
    }
    Ok(acc.expect("m >= 1"))
}

fn iterated_sumset_with(a: &ResidueSet, m: u64, kernel: Kernel) -> Result<ResidueSet> {
    let mut acc = a.clone();
    for _ in 1..m {
        acc = sumset(&acc, a, kernel)?;
    }
    Ok(acc)
}

/// `A - B = {a - b mod N}`.
pub fn difference_set(a: &ResidueSet, b: &ResidueSet) -> Result<ResidueSet> {
    a.check_modulus(b)?;
    sumset_auto(a, &negate(b))
}

/// `uA + v` for a unit `u`.
pub fn affine_image(a: &ResidueSet, u: i64, v: i64) -> Result<ResidueSet> {
    let n = a.modulus();
    let u_red = reduce(u, n);
    if u_red.gcd(&(n as u64)) != 1 {
        return Err(Error::NotUnit {
            u: u_red,
            modulus: n as u64,
        });
    }
    Ok(translate(&dilate(a, u), v))
}

pub fn require_prime(n: usize) -> Result<()> {
    if is_prime(n as u64) {
        Ok(())
    } else {
        Err(Error::NotPrime(n as u64))
    }
}

/// Index of the lexicographically least rotation of `s`.
fn least_rotation(s: &[usize]) -> usize {
    let n = s.len();
    let (mut i, mut j, mut k) = (0, 1, 0);
    while i < n && j < n && k < n {
        let (a, b) = (s[(i + k) % n], s[(j + k) % n]);
        if a == b {
            k += 1;
            continue;
        }
        if a > b {
            i += k + 1;
        } else {
            j += k + 1;
        }
        if i == j {
            j += 1;
        }
        k = 0;
    }
    i.min(j)
}

/// Cyclic gap sequence of an ascending member list.
fn gaps(elements: &[usize], n: usize, out: &mut Vec<usize>) {
    out.clear();
    for w in elements.windows(2) {
        out.push(w[1] - w[0]);
    }
    out.push(elements[0] + n - elements[elements.len() - 1]);
}

/// The least member of the affine orbit `{uA + v}` under [`ResidueSet::lex_cmp`].
///
/// The least translate of a fixed dilate contains 0, and its ascending
/// element list is the prefix-sum sequence of a rotation of the cyclic gap
/// sequence; so for each unit `u` only the least gap rotation is needed.
pub fn canonical_form(a: &ResidueSet) -> Result<ResidueSet> {
    let n = a.modulus();
    require_prime(n)?;
    let m = a.len();
    if m == 0 || m == n {
        return Ok(a.clone());
    }
    if m == 1 {
        return Ok(ResidueSet::from_elements(n, [0]).expect("0 < n"));
    }
    let mut best: Option<Vec<usize>> = None;
    let mut elements = Vec::with_capacity(m);
    let mut gap_buf = Vec::with_capacity(m);
    let mut rotated = Vec::with_capacity(m);
    for u in 1..n {
        let image = dilate(a, u as i64);
        elements.clear();
        elements.extend(image.iter());
        gaps(&elements, n, &mut gap_buf);
        let r = least_rotation(&gap_buf);
        rotated.clear();
        rotated.extend(gap_buf[r..].iter().chain(&gap_buf[..r]).copied());
        if best.as_ref().is_none_or(|b| rotated < *b) {
            best = Some(rotated.clone());
        }
    }
    let gaps = best.expect("n >= 2");
    let mut out = ResidueSet::empty(n);
    let mut x = 0;
    for g in &gaps[..m] {
        out.insert(x);
        x += g;
    }
    Ok(out)
}
