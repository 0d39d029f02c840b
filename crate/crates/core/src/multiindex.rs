//! Strictly increasing multi-indices stored as bitmasks.
//!
//! A `k`-form on an `n`-dimensional chart stores its `C(n, k)` coefficients
//! in increasing numeric order of the bitmasks, which is colexicographic
//! order on index sets: for 2-forms in dimension 3 that is `{0,1}`,
//! `{0,2}`, `{1,2}`.

/// Binomial coefficient; zero when `k > n`.
pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// All `k`-element subsets of `0..n`, in storage order.
pub fn masks(n: usize, k: usize) -> Vec<u32> {
    assert!(n <= 31, "charts are limited to 31 coordinates");
    if k > n {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    let mut out = Vec::with_capacity(binom(n, k));
    // Gosper's hack enumerates same-popcount masks in increasing order.
    let mut m: u32 = (1u32 << k) - 1;
    let limit = 1u64 << n;
    while (m as u64) < limit {
        out.push(m);
        let c = m & m.wrapping_neg();
        let r = m + c;
        if r == 0 {
            break;
        }
        m = (((r ^ m) >> 2) / c) | r;
    }
    out
}

/// Position of `mask` among the masks of the same popcount.
pub fn rank(mask: u32) -> usize {
    let mut r = 0;
    let mut i = 0;
    let mut m = mask;
    while m != 0 {
        let b = m.trailing_zeros() as usize;
        i += 1;
        r += binom(b, i);
        m &= m - 1;
    }
    r
}

/// Number of elements of `mask` strictly below `j`.
pub fn below(mask: u32, j: usize) -> u32 {
    (mask & ((1u32 << j) - 1)).count_ones()
}

/// `(−1)^count`.
pub fn parity_sign(count: u32) -> f64 {
    if count.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Sign of `dx_I ∧ dx_J = ±dx_{I∪J}` for disjoint `I`, `J`.
pub fn wedge_sign(i: u32, j: u32) -> f64 {
    let mut inversions = 0;
    let mut m = j;
    while m != 0 {
        let b = m.trailing_zeros();
        inversions += (i >> (b + 1)).count_ones();
        m &= m - 1;
    }
    parity_sign(inversions)
}

/// The elements of a mask in increasing order.
pub fn indices(mask: u32) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut m = mask;
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

/// Sorts `idx` into a mask, returning the permutation sign, or `None` on a
/// repeated index.
pub fn sort_indices(idx: &[usize]) -> Option<(u32, f64)> {
    let mut v = idx.to_vec();
    let mut swaps = 0u32;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                swaps += 1;
            }
        }
    }
    let mut mask = 0u32;
    for &i in &v {
        if i >= 31 || mask & (1 << i) != 0 {
            return None;
        }
        mask |= 1 << i;
    }
    Some((mask, parity_sign(swaps)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_are_ranked_in_order() {
        for n in 0..8 {
            for k in 0..=n {
                let ms = masks(n, k);
                assert_eq!(ms.len(), binom(n, k));
                for (i, &m) in ms.iter().enumerate() {
                    assert_eq!(m.count_ones() as usize, k);
                    assert_eq!(rank(m), i);
                }
            }
        }
        assert_eq!(masks(3, 2), vec![0b011, 0b101, 0b110]);
    }

    #[test]
    fn signs() {
        // dy ∧ dx = −dx ∧ dy
        assert_eq!(wedge_sign(0b10, 0b01), -1.0);
        assert_eq!(wedge_sign(0b01, 0b10), 1.0);
        // dz ∧ (dx∧dy) = dx∧dy∧dz
        assert_eq!(wedge_sign(0b100, 0b011), 1.0);
        assert_eq!(sort_indices(&[2, 0, 1]), Some((0b111, 1.0)));
        assert_eq!(sort_indices(&[1, 0]), Some((0b11, -1.0)));
        assert_eq!(sort_indices(&[1, 1]), None);
    }
}
