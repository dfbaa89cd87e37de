//! Lexicographic r-subsets of `0..n`, addressed by rank.

/// `C(n, r)`, saturating at `u128::MAX`.
pub fn binomial(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) / (i + 1) stays integral at every step.
        let Some(next) = acc.checked_mul((n - i) as u128) else {
            return u128::MAX;
        };
        acc = next / (i + 1) as u128;
    }
    acc
}

/// The subset of lexicographic rank `rank` among r-subsets of `0..n`.
pub fn unrank(n: u64, r: u64, mut rank: u128) -> Vec<u64> {
    let mut out = Vec::with_capacity(r as usize);
    let mut next = 0;
    for slot in 0..r {
        let remaining = r - slot - 1;
        loop {
            let with_next = binomial(n - next - 1, remaining);
            if rank < with_next {
                break;
            }
            rank -= with_next;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Advances `c` to its lexicographic successor; false after the last subset.
pub fn advance(c: &mut [u64], n: u64) -> bool {
    let r = c.len() as u64;
    let Some(i) = (0..c.len()).rev().find(|&i| c[i] < n - r + i as u64) else {
        return false;
    };
    c[i] += 1;
    for j in i + 1..c.len() {
        c[j] = c[j - 1] + 1;
    }
    true
}
