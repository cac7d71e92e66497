//! Stable argsort for f64 slices.
//!
//! Slicing sorts thousands of short arrays per call, so this is the hot loop
//! of every distance and gradient. Each value gets an integer key from an
//! affine map of the value range with about as many levels as values; a
//! stable counting pass orders the keys, and the few entries whose keys
//! collide are put in exact order afterwards.
//! The output equals a stable comparison sort under `f64::total_cmp` with
//! ties broken by original index.

const RADIX_MIN: usize = 64;
const DIGIT_BITS: u32 = 11;
const BUCKETS: usize = 1 << DIGIT_BITS;

#[inline]
fn ordered_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

/// Reusable buffers for [`argsort`].
#[derive(Debug, Default, Clone)]
pub struct SortScratch {
    items: Vec<u64>,
    items_tmp: Vec<u64>,
    counts: Vec<u32>,
    sorted: Vec<f64>,
}

/// Writes into `perm` the indices of `values` in ascending order.
pub fn argsort(values: &[f64], perm: &mut Vec<u32>, scratch: &mut SortScratch) {
    let mut sorted = std::mem::take(&mut scratch.sorted);
    sort_indexed(values, perm, &mut sorted, scratch);
    scratch.sorted = sorted;
}

/// Sorted copy of `values` written into `out`.
pub fn sorted_into(values: &[f64], out: &mut Vec<f64>, perm: &mut Vec<u32>, scratch: &mut SortScratch) {
    sort_indexed(values, perm, out, scratch);
}

/// Fills `perm` with the sorting permutation and `sorted` with the sorted
/// values.
pub(crate) fn sort_indexed(values: &[f64], perm: &mut Vec<u32>, sorted: &mut Vec<f64>, scratch: &mut SortScratch) {
    let n = values.len();
    assert!(n <= u32::MAX as usize, "argsort supports at most 2^32 values");
    perm.clear();
    sorted.clear();
    if n < RADIX_MIN {
        perm.extend(0..n as u32);
        perm.sort_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]));
        sorted.extend(perm.iter().map(|&i| values[i as usize]));
        return;
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut nan = false;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
        nan |= v.is_nan();
    }
    let span = hi - lo;
    if !span.is_finite() || nan {
        perm.extend(0..n as u32);
        perm.sort_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]));
        sorted.extend(perm.iter().map(|&i| values[i as usize]));
        return;
    }
    // Item = key in the high half, original index in the low half. The
    // affine key is monotone under rounding, so only runs of equal keys can
    // be out of order afterwards. Up to 2^16 values one counting pass with
    // about n buckets suffices; beyond that two 11-bit passes are used.
    let single = n <= 1 << 16;
    let key_bits = if single { usize::BITS - (n - 1).leading_zeros() } else { 2 * DIGIT_BITS };
    let max_key = (1u64 << key_bits) - 1;
    let scale = if span > 0.0 { max_key as f64 / span } else { 0.0 };
    let SortScratch { items, items_tmp, counts, .. } = scratch;
    let mut longest_run = n;
    items.clear();
    items.extend(values.iter().enumerate().map(|(i, &v)| {
        // (v - lo) * scale <= span * scale, which rounds to at most max_key
        let key = ((v - lo) * scale) as i64 as u64;
        (key << 32) | i as u64
    }));
    items_tmp.resize(n, 0);
    counts.clear();
    if single {
        counts.resize(1 << key_bits, 0);
        for &it in items.iter() {
            counts[(it >> 32) as usize] += 1;
        }
        longest_run = counts.iter().copied().max().unwrap_or(0) as usize;
        counting_pass(items, items_tmp, counts, 32, max_key);
    } else {
        counts.resize(2 * BUCKETS, 0);
        let (c0, c1) = counts.split_at_mut(BUCKETS);
        for &it in items.iter() {
            c0[((it >> 32) & 0x7FF) as usize] += 1;
            c1[(it >> 43) as usize] += 1;
        }
        counting_pass(items, items_tmp, c0, 32, 0x7FF);
        counting_pass(items, items_tmp, c1, 32 + DIGIT_BITS, 0x7FF);
    }
    perm.extend(items.iter().map(|&it| it as u32));
    sorted.extend(perm.iter().map(|&i| values[i as usize]));

    // Repair order inside runs of colliding keys. With short runs a single
    // insertion pass is cheapest; long runs are sorted one by one.
    if longest_run <= 32 {
        insertion_repair(perm, sorted);
        return;
    }
    let mut start = 0;
    while start < n {
        let key = items[start] >> 32;
        let mut end = start + 1;
        while end < n && items[end] >> 32 == key {
            end += 1;
        }
        if end - start > 1 {
            repair_run(&mut perm[start..end], &mut sorted[start..end]);
        }
        start = end;
    }
}

/// One stable scatter by the digit `(item >> shift) & mask`, given the digit
/// histogram in `counts`.
fn counting_pass(items: &mut Vec<u64>, tmp: &mut Vec<u64>, counts: &mut [u32], shift: u32, mask: u64) {
    let n = items.len();
    // A digit shared by every key leaves the order unchanged.
    if counts[((items[0] >> shift) & mask) as usize] as usize == n {
        return;
    }
    let mut acc = 0u32;
    for c in counts.iter_mut() {
        let cnt = *c;
        *c = acc;
        acc += cnt;
    }
    for &it in items.iter() {
        let digit = ((it >> shift) & mask) as usize;
        tmp[counts[digit] as usize] = it;
        counts[digit] += 1;
    }
    std::mem::swap(items, tmp);
}

fn repair_run(perm: &mut [u32], sorted: &mut [f64]) {
    if perm.len() > 32 {
        let mut entries: Vec<(u64, u32, f64)> =
            sorted.iter().zip(perm.iter()).map(|(&v, &i)| (ordered_bits(v), i, v)).collect();
        entries.sort_unstable_by_key(|e| (e.0, e.1));
        for ((p, s), e) in perm.iter_mut().zip(sorted.iter_mut()).zip(&entries) {
            *p = e.1;
            *s = e.2;
        }
        return;
    }
    insertion_repair(perm, sorted);
}

/// Insertion sort by `(value, index)`; linear when entries are only
/// displaced within short runs.
fn insertion_repair(perm: &mut [u32], sorted: &mut [f64]) {
    let less = |a: (f64, u32), b: (f64, u32)| (ordered_bits(a.0), a.1) < (ordered_bits(b.0), b.1);
    for i in 1..perm.len() {
        if sorted[i - 1] < sorted[i] {
            continue;
        }
        let cur = (sorted[i], perm[i]);
        let mut j = i;
        while j > 0 && less(cur, (sorted[j - 1], perm[j - 1])) {
            sorted[j] = sorted[j - 1];
            perm[j] = perm[j - 1];
            j -= 1;
        }
        sorted[j] = cur.0;
        perm[j] = cur.1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference(values: &[f64]) -> Vec<u32> {
        let mut p: Vec<u32> = (0..values.len() as u32).collect();
        p.sort_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]));
        p
    }

    #[test]
    fn handles_ties_signs_and_near_collisions() {
        let mut v: Vec<f64> = (0..500).map(|i| ((i * 37) % 101) as f64 - 50.0).collect();
        v.extend((0..200).map(|i| 1.0 + i as f64 * 1e-13));
        v.push(-0.0);
        v.push(0.0);
        v.push(f64::MIN_POSITIVE);
        let mut perm = Vec::new();
        argsort(&v, &mut perm, &mut SortScratch::default());
        assert_eq!(perm, reference(&v));
    }

    #[test]
    fn outliers_collapse_keys_without_breaking_order() {
        let mut v: Vec<f64> = (0..3000).map(|i| ((i * 7919) % 3001) as f64 * 1e-12).collect();
        v.push(1e6);
        v.push(-1e6);
        v.extend([0.0, -0.0, 0.0]);
        let mut perm = Vec::new();
        let mut sorted = Vec::new();
        sorted_into(&v, &mut sorted, &mut perm, &mut SortScratch::default());
        assert_eq!(perm, reference(&v));
        assert!(sorted.iter().zip(&perm).all(|(s, &i)| s.to_bits() == v[i as usize].to_bits()));
    }

    #[test]
    fn constant_and_non_finite_inputs() {
        let v = vec![2.5; 100];
        let mut perm = Vec::new();
        argsort(&v, &mut perm, &mut SortScratch::default());
        assert_eq!(perm, reference(&v));
        let mut w: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        w[10] = f64::INFINITY;
        w[20] = f64::NEG_INFINITY;
        argsort(&w, &mut perm, &mut SortScratch::default());
        assert_eq!(perm, reference(&w));
    }

    proptest! {
        #[test]
        fn sorted_values_follow_the_permutation(v in prop::collection::vec(-1e3f64..1e3, 64..500)) {
            let (mut perm, mut sorted) = (Vec::new(), Vec::new());
            sorted_into(&v, &mut sorted, &mut perm, &mut SortScratch::default());
            prop_assert_eq!(&perm, &reference(&v));
            for (s, &i) in sorted.iter().zip(&perm) {
                prop_assert_eq!(s.to_bits(), v[i as usize].to_bits());
            }
        }

        #[test]
        fn matches_stable_comparison_sort(v in prop::collection::vec(-4.0f64..4.0, 0..400)) {
            let mut perm = Vec::new();
            argsort(&v, &mut perm, &mut SortScratch::default());
            prop_assert_eq!(perm, reference(&v));
        }

        #[test]
        fn matches_with_heavy_duplication(v in prop::collection::vec(0u8..5, 64..300)) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            let mut perm = Vec::new();
            argsort(&v, &mut perm, &mut SortScratch::default());
            prop_assert_eq!(perm, reference(&v));
        }
    }
}
