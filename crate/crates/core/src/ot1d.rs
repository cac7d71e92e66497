//! One-dimensional p-Wasserstein distances.
//!
//! On the line the optimal coupling is the quantile (monotone) coupling, so
//! `W_p^p(μ, ν) = ∫₀¹ |F_μ⁻¹(t) - F_ν⁻¹(t)|^p dt`. For two uniform samples of
//! equal size this reduces to matching order statistics.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sort::{argsort, SortScratch};
use crate::sum::pairwise_sum;

/// Weighted atoms on the real line; weights are non-negative and sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSamples1D {
    values: Vec<f64>,
    weights: Vec<f64>,
}

/// Tolerance on `Σ weights = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

impl WeightedSamples1D {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("empty sample"));
        }
        if values.len() != weights.len() {
            return Err(invalid(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite value"));
        }
        validate_weights(&weights)?;
        Ok(Self { values, weights })
    }

    /// Atoms of mass `1/n` each.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(values, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub(crate) fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(invalid("weights must be finite and non-negative"));
    }
    let total = pairwise_sum(weights);
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(invalid(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Order of the transport cost, `p >= 1`; 1 and 2 avoid `powf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Order(f64);

impl Order {
    pub const ONE: Order = Order(1.0);
    pub const TWO: Order = Order(2.0);

    pub fn new(p: f64) -> Result<Self> {
        if p >= 1.0 && p.is_finite() {
            Ok(Self(p))
        } else {
            Err(invalid(format!("order p must be finite and >= 1, got {p}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `|x|^p`.
    #[inline]
    pub fn cost(self, x: f64) -> f64 {
        let a = x.abs();
        if self.0 == 2.0 {
            a * a
        } else if self.0 == 1.0 {
            a
        } else {
            a.powf(self.0)
        }
    }

    /// `d/dx |x|^p = p |x|^{p-1} sign(x)`.
    #[inline]
    pub fn cost_derivative(self, x: f64) -> f64 {
        if self.0 == 2.0 {
            2.0 * x
        } else if self.0 == 1.0 {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        } else if x == 0.0 {
            0.0
        } else {
            self.0 * x.abs().powf(self.0 - 1.0) * x.signum()
        }
    }

    /// `s^{1/p}`.
    #[inline]
    pub fn root(self, s: f64) -> f64 {
        let s = s.max(0.0);
        if self.0 == 2.0 {
            s.sqrt()
        } else if self.0 == 1.0 {
            s
        } else {
            s.powf(1.0 / self.0)
        }
    }
}

impl TryFrom<f64> for Order {
    type Error = crate::error::Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Order> for f64 {
    fn from(o: Order) -> Self {
        o.0
    }
}

/// `W_p` between two equally sized uniform samples: the p-mean of the
/// differences of their order statistics.
pub fn w1d_uniform(u: &[f64], v: &[f64], p: f64) -> Result<f64> {
    let p = Order::new(p)?;
    Ok(p.root(w1d_uniform_pow(u, v, p)?))
}

/// `W_p^p` counterpart of [`w1d_uniform`].
pub fn w1d_uniform_pow(u: &[f64], v: &[f64], p: Order) -> Result<f64> {
    if u.is_empty() {
        return Err(invalid("empty sample"));
    }
    if u.len() != v.len() {
        return Err(invalid(format!("sample sizes differ: {} vs {}", u.len(), v.len())));
    }
    if u.iter().chain(v).any(|x| !x.is_finite()) {
        return Err(invalid("non-finite value"));
    }
    let mut su = u.to_vec();
    let mut sv = v.to_vec();
    su.sort_by(f64::total_cmp);
    sv.sort_by(f64::total_cmp);
    Ok(sorted_uniform_pow(&su, &sv, p))
}

/// `(1/n) Σ |u_(i) - v_(i)|^p` for already sorted inputs of equal length.
#[inline]
pub(crate) fn sorted_uniform_pow(u: &[f64], v: &[f64], p: Order) -> f64 {
    let mut acc = 0.0;
    for (a, b) in u.iter().zip(v) {
        acc += p.cost(a - b);
    }
    acc / u.len() as f64
}

/// `W_p` between two weighted samples by merging their CDF breakpoints.
pub fn w1d_weighted(mu: &WeightedSamples1D, nu: &WeightedSamples1D, p: f64) -> Result<f64> {
    let p = Order::new(p)?;
    Ok(p.root(w1d_weighted_pow(mu, nu, p)))
}

/// `W_p^p` counterpart of [`w1d_weighted`].
pub fn w1d_weighted_pow(mu: &WeightedSamples1D, nu: &WeightedSamples1D, p: Order) -> f64 {
    let mut scratch = Scratch1D::default();
    weighted_pow_with(&mu.values, &mu.weights, &nu.values, &nu.weights, p, &mut scratch)
}

/// Reusable buffers for the weighted path.
#[derive(Debug, Default, Clone)]
pub(crate) struct Scratch1D {
    pub(crate) sort: SortScratch,
    pub(crate) perm_u: Vec<u32>,
    pub(crate) perm_v: Vec<u32>,
    cdf_u: Vec<f64>,
    cdf_v: Vec<f64>,
}

/// Quantile-coupling cost for unsorted weighted inputs.
pub(crate) fn weighted_pow_with(
    u: &[f64],
    wu: &[f64],
    v: &[f64],
    wv: &[f64],
    p: Order,
    s: &mut Scratch1D,
) -> f64 {
    argsort(u, &mut s.perm_u, &mut s.sort);
    argsort(v, &mut s.perm_v, &mut s.sort);
    cumulative(wu, &s.perm_u, &mut s.cdf_u);
    cumulative(wv, &s.perm_v, &mut s.cdf_v);
    let (n, m) = (u.len(), v.len());
    let (mut i, mut j) = (0, 0);
    let mut t = 0.0;
    let mut acc = 0.0;
    while i < n && j < m {
        let next = s.cdf_u[i].min(s.cdf_v[j]);
        let width = next - t;
        if width > 0.0 {
            acc += width * p.cost(u[s.perm_u[i] as usize] - v[s.perm_v[j] as usize]);
        }
        t = next;
        if s.cdf_u[i] <= next {
            i += 1;
        }
        if s.cdf_v[j] <= next {
            j += 1;
        }
    }
    acc
}

/// Compensated prefix sums of `w` in `perm` order; the last entry is pinned
/// to exactly 1 so both CDFs end on the same breakpoint.
fn cumulative(w: &[f64], perm: &[u32], out: &mut Vec<f64>) {
    out.clear();
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &i in perm {
        let x = w[i as usize];
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    /// Exhaustive minimum over all matchings.
    fn brute_force_pow(u: &[f64], v: &[f64], p: Order) -> f64 {
        fn rec(u: &[f64], v: &[f64], used: &mut Vec<bool>, k: usize, acc: f64, p: Order, best: &mut f64) {
            if k == u.len() {
                *best = best.min(acc);
                return;
            }
            for j in 0..v.len() {
                if !used[j] {
                    used[j] = true;
                    rec(u, v, used, k + 1, acc + p.cost(u[k] - v[j]), p, best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(u, v, &mut vec![false; v.len()], 0, 0.0, p, &mut best);
        best / u.len() as f64
    }

    #[test]
    fn uniform_examples() {
        assert_eq!(w1d_uniform(&[0.3, -1.0], &[-1.0, 0.3], 2.0).unwrap(), 0.0);
        assert_eq!(w1d_uniform(&[0.0, 1.0], &[2.0, 3.0], 2.0).unwrap(), 2.0);
        assert_eq!(w1d_uniform(&[0.0, 1.0], &[1.0, 0.0], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn uniform_errors() {
        assert!(w1d_uniform(&[], &[], 1.0).is_err());
        assert!(w1d_uniform(&[1.0], &[1.0, 2.0], 1.0).is_err());
        assert!(w1d_uniform(&[1.0], &[1.0], 0.5).is_err());
        assert!(w1d_uniform(&[f64::NAN], &[1.0], 1.0).is_err());
    }

    #[test]
    fn weighted_examples() {
        let mu = WeightedSamples1D::new(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap();
        let nu = WeightedSamples1D::new(vec![1.0], vec![1.0]).unwrap();
        assert_abs_diff_eq!(w1d_weighted(&mu, &nu, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(w1d_weighted(&mu, &mu, 2.0).unwrap(), 0.0);
        assert!(WeightedSamples1D::new(vec![0.0], vec![0.5]).is_err());
        assert!(WeightedSamples1D::new(vec![0.0, 1.0], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn brute_force_equivalence() {
        let mut rng = rng_from_seed(21);
        for trial in 0..200 {
            let n = 1 + trial % 6;
            let p = if trial % 2 == 0 { Order::ONE } else { Order::TWO };
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let fast = w1d_uniform_pow(&u, &v, p).unwrap();
            let brute = brute_force_pow(&u, &v, p);
            assert!((fast - brute).abs() <= 1e-12, "{fast} vs {brute}");
        }
    }

    #[test]
    fn weighted_agrees_with_uniform_path() {
        let mut rng = rng_from_seed(22);
        for trial in 0..100 {
            let n = 1 + trial % 40;
            let p = [1.0, 2.0, 1.5][trial % 3];
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let a = w1d_uniform(&u, &v, p).unwrap();
            let b = w1d_weighted(
                &WeightedSamples1D::uniform(u).unwrap(),
                &WeightedSamples1D::uniform(v).unwrap(),
                p,
            )
            .unwrap();
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn splitting_an_atom_changes_nothing() {
        let mu = WeightedSamples1D::new(vec![0.0, 1.0, 4.0], vec![0.2, 0.5, 0.3]).unwrap();
        let split = WeightedSamples1D::new(vec![0.0, 1.0, 1.0, 4.0], vec![0.2, 0.25, 0.25, 0.3]).unwrap();
        let nu = WeightedSamples1D::new(vec![-1.0, 2.0], vec![0.6, 0.4]).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let a = w1d_weighted(&mu, &nu, p).unwrap();
            let b = w1d_weighted(&split, &nu, p).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        let mut rng = rng_from_seed(23);
        for _ in 0..500 {
            let n = rng.random_range(1..20);
            let mut draw = || -> Vec<f64> { (0..n).map(|_| rng.random_range(-5.0..5.0)).collect() };
            let (a, b, c) = (draw(), draw(), draw());
            for p in [1.0, 2.0] {
                let ab = w1d_uniform(&a, &b, p).unwrap();
                let ba = w1d_uniform(&b, &a, p).unwrap();
                let bc = w1d_uniform(&b, &c, p).unwrap();
                let ac = w1d_uniform(&a, &c, p).unwrap();
                assert!(ab >= 0.0);
                assert_eq!(ab, ba);
                assert!(ac <= ab + bc + 1e-10);
            }
        }
    }

    proptest! {
        #[test]
        fn translation_equivariance(
            u in prop::collection::vec(-10.0f64..10.0, 1..30),
            shift in -5.0f64..5.0,
        ) {
            let v: Vec<f64> = u.iter().rev().map(|x| x * 0.5 + 1.0).collect();
            let a = w1d_uniform(&u, &v, 2.0).unwrap();
            let us: Vec<f64> = u.iter().map(|x| x + shift).collect();
            let vs: Vec<f64> = v.iter().map(|x| x + shift).collect();
            let b = w1d_uniform(&us, &vs, 2.0).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }
    }
}
