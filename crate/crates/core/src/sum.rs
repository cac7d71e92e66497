//! Deterministic reductions.

const LEAF: usize = 32;

/// Pairwise (cascade) summation. The split points depend only on the length,
/// so the result is bit-stable regardless of how the inputs were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise element-wise sum of equally sized buffers.
pub(crate) fn pairwise_sum_buffers(mut bufs: Vec<Vec<f64>>) -> Vec<f64> {
    assert!(!bufs.is_empty());
    while bufs.len() > 1 {
        let mut next = Vec::with_capacity(bufs.len().div_ceil(2));
        let mut it = bufs.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += *y;
                }
            }
            next.push(a);
        }
        bufs = next;
    }
    bufs.pop().unwrap()
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance; `None` for fewer than two samples.
pub(crate) fn sample_variance(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    Some(pairwise_sum(&sq) / (xs.len() - 1) as f64)
}
