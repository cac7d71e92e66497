//! Uniform and von Mises–Fisher sampling on 𝕊^d, plus the closed-form vMF
//! density on 𝕊².

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{dot, norm, SpherePoint};
use crate::error::{check_dim, invalid, Error, Result};

/// Draws `n` points uniformly on 𝕊^d by normalizing standard Gaussians.
pub fn sample_uniform<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Result<Vec<SpherePoint>> {
    if d < 1 {
        return Err(invalid("sphere dimension must be >= 1"));
    }
    Ok((0..n).map(|_| uniform_point(d + 1, rng)).collect())
}

pub(crate) fn uniform_point<R: Rng + ?Sized>(ambient: usize, rng: &mut R) -> SpherePoint {
    loop {
        let v: Vec<f64> = (0..ambient).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        // Rejecting tiny norms keeps the normalization well conditioned.
        if n > 1e-12 {
            return SpherePoint::from_unit_unchecked(v.into_iter().map(|c| c / n).collect());
        }
    }
}

/// von Mises–Fisher distribution `f(x) ∝ exp(κ μᵀx)`; `κ = 0` is uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VonMisesFisher {
    mu: SpherePoint,
    kappa: f64,
}

impl VonMisesFisher {
    pub fn new(mu: SpherePoint, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(invalid(format!("kappa must be finite and >= 0, got {kappa}")));
        }
        Ok(Self { mu, kappa })
    }

    /// The uniform distribution on 𝕊^d, as a vMF with `κ = 0`.
    pub fn uniform(d: usize) -> Self {
        Self { mu: SpherePoint::north_pole(d), kappa: 0.0 }
    }

    pub fn mean_direction(&self) -> &SpherePoint {
        &self.mu
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.mu.dim()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<SpherePoint> {
        sample_vmf(self, n, rng)
    }

    pub fn log_density(&self, s: &SpherePoint) -> Result<f64> {
        vmf_log_density(self, s)
    }
}

/// Wood's rejection sampler for the cosine `w = ⟨μ, x⟩`, a uniform tangential
/// direction, and a Householder reflection taking the north pole to `μ`.
pub fn sample_vmf<R: Rng + ?Sized>(dist: &VonMisesFisher, n: usize, rng: &mut R) -> Vec<SpherePoint> {
    let ambient = dist.dim() + 1;
    if dist.kappa == 0.0 {
        return (0..n).map(|_| uniform_point(ambient, rng)).collect();
    }
    let m1 = (ambient - 1) as f64;
    let kappa = dist.kappa;
    // b = (-2κ + sqrt(4κ² + (m-1)²)) / (m-1), rearranged to avoid cancellation.
    let b = m1 / (2.0 * kappa + (4.0 * kappa * kappa + m1 * m1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + m1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(m1 / 2.0, m1 / 2.0).expect("valid beta parameters");

    let mu = dist.mu.coords();
    let mut reflector: Vec<f64> = mu.iter().map(|c| -c).collect();
    reflector[ambient - 1] += 1.0;
    let rnorm2 = dot(&reflector, &reflector);

    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let w = loop {
            let z: f64 = beta.sample(rng);
            let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
            let u: f64 = rng.random();
            if kappa * w + m1 * (1.0 - x0 * w).ln() - c >= u.ln() {
                break w;
            }
        };
        let tangential = uniform_point(ambient - 1, rng);
        let scale = (1.0 - w * w).max(0.0).sqrt();
        let mut x: Vec<f64> = tangential.coords().iter().map(|t| t * scale).collect();
        x.push(w);
        if rnorm2 > 1e-24 {
            let proj = 2.0 * dot(&reflector, &x) / rnorm2;
            for (xi, ri) in x.iter_mut().zip(&reflector) {
                *xi -= proj * ri;
            }
        }
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        out.push(SpherePoint::from_unit_unchecked(x));
    }
    out
}

/// `log f(s) = log κ - log(4π sinh κ) + κ⟨μ, s⟩` on 𝕊²; `-log 4π` at `κ = 0`.
pub fn vmf_log_density(dist: &VonMisesFisher, s: &SpherePoint) -> Result<f64> {
    if dist.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            found: dist.dim(),
            reason: "the closed-form vMF density is implemented for the 2-sphere only",
        });
    }
    check_dim(3, s.coords().len())?;
    Ok(log_normalizer_s2(dist.kappa) + dist.kappa * dot(dist.mu.coords(), s.coords()))
}

/// `log(κ / (4π sinh κ))`, stable for small and large κ.
pub(crate) fn log_normalizer_s2(kappa: f64) -> f64 {
    if kappa < 1e-8 {
        // κ / sinh κ = 1 - κ²/6 + O(κ⁴)
        return -(4.0 * PI).ln() - kappa * kappa / 6.0;
    }
    // log sinh κ = κ + log(1 - e^{-2κ}) - log 2
    let log_sinh = kappa + (-(-2.0 * kappa).exp()).ln_1p() - std::f64::consts::LN_2;
    kappa.ln() - (4.0 * PI).ln() - log_sinh
}

/// Finite mixture of vMF components sharing one sphere dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmfMixture {
    components: Vec<VonMisesFisher>,
    weights: Vec<f64>,
}

impl VmfMixture {
    pub fn new(components: Vec<VonMisesFisher>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("mixture needs at least one component"));
        }
        if components.len() != weights.len() {
            return Err(invalid("one weight per component is required"));
        }
        let d = components[0].dim();
        for c in &components {
            check_dim(d, c.dim())?;
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("mixture weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self { components, weights })
    }

    /// Equal-weight mixture.
    pub fn uniform_weights(components: Vec<VonMisesFisher>) -> Result<Self> {
        let k = components.len().max(1);
        Self::new(components, vec![1.0 / k as f64; k])
    }

    /// Twelve components centred on the vertices of a regular icosahedron,
    /// all with concentration `kappa`.
    pub fn icosahedral(kappa: f64) -> Result<Self> {
        let comps = icosahedron_vertices()
            .into_iter()
            .map(|mu| VonMisesFisher::new(mu, kappa))
            .collect::<Result<Vec<_>>>()?;
        Self::uniform_weights(comps)
    }

    pub fn components(&self) -> &[VonMisesFisher] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// `n` i.i.d. draws; the component of each draw is chosen by weight.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<SpherePoint> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut k = self.components.len() - 1;
            for (i, w) in self.weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    k = i;
                    break;
                }
            }
            out.extend(sample_vmf(&self.components[k], 1, rng));
        }
        out
    }

    /// Exactly `per_component` draws from each component, in component order.
    pub fn sample_stratified<R: Rng + ?Sized>(&self, per_component: usize, rng: &mut R) -> Vec<SpherePoint> {
        self.components
            .iter()
            .flat_map(|c| sample_vmf(c, per_component, rng))
            .collect()
    }

    /// `log Σ_k w_k f_k(s)` on 𝕊².
    pub fn log_density(&self, s: &SpherePoint) -> Result<f64> {
        let logs = self
            .components
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(c, w)| Ok(vmf_log_density(c, s)? + w.ln()))
            .collect::<Result<Vec<f64>>>()?;
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
        Ok(max + sum.ln())
    }
}

/// The 12 vertices of the icosahedron `(0, ±1, ±φ)`, `(±1, ±φ, 0)`,
/// `(±φ, 0, ±1)` with `φ` the golden ratio, normalized onto 𝕊².
pub fn icosahedron_vertices() -> Vec<SpherePoint> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v = Vec::with_capacity(12);
    for a in [-1.0, 1.0] {
        for b in [-phi, phi] {
            v.push([0.0, a, b]);
            v.push([a, b, 0.0]);
            v.push([b, 0.0, a]);
        }
    }
    v.into_iter()
        .map(|c| SpherePoint::new(c.to_vec()).expect("non-zero vertex"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::sphere::geodesic_distance;
    use approx::assert_abs_diff_eq;

    fn mean_vec(pts: &[SpherePoint]) -> Vec<f64> {
        let m = pts[0].coords().len();
        let mut acc = vec![0.0; m];
        for p in pts {
            for (a, c) in acc.iter_mut().zip(p.coords()) {
                *a += c;
            }
        }
        acc.iter().map(|a| a / pts.len() as f64).collect()
    }

    #[test]
    fn uniform_examples() {
        let mut rng = rng_from_seed(1);
        let one = sample_uniform(2, 1, &mut rng).unwrap();
        assert_eq!(one.len(), 1);
        assert_abs_diff_eq!(norm(one[0].coords()), 1.0, epsilon = 1e-12);

        let pts = sample_uniform(2, 100_000, &mut rng).unwrap();
        assert!(norm(&mean_vec(&pts)) < 0.02);
        let s3: f64 = pts.iter().map(|p| p.coords()[2].powi(2)).sum::<f64>() / pts.len() as f64;
        assert!((s3 - 1.0 / 3.0).abs() < 0.01);
        assert!(sample_uniform(0, 3, &mut rng).is_err());
    }

    #[test]
    fn vmf_zero_kappa_is_uniform() {
        let mut rng = rng_from_seed(2);
        let pts = sample_vmf(&VonMisesFisher::uniform(2), 100_000, &mut rng);
        let s3: f64 = pts.iter().map(|p| p.coords()[2].powi(2)).sum::<f64>() / pts.len() as f64;
        assert!((s3 - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn vmf_concentrates_around_mean() {
        let mut rng = rng_from_seed(3);
        let mu = SpherePoint::north_pole(2);
        let pts = sample_vmf(&VonMisesFisher::new(mu.clone(), 50.0).unwrap(), 10_000, &mut rng);
        let m = SpherePoint::new(mean_vec(&pts)).unwrap();
        assert!(geodesic_distance(&m, &mu).unwrap() < 1f64.to_radians());
    }

    #[test]
    fn vmf_mean_resultant_length() {
        let mut rng = rng_from_seed(4);
        let mu = SpherePoint::new(vec![0.3, -0.5, 0.2]).unwrap();
        let dist = VonMisesFisher::new(mu.clone(), 10.0).unwrap();
        let pts = dist.sample(100_000, &mut rng);
        let r: f64 = pts.iter().map(|p| dot(p.coords(), mu.coords())).sum::<f64>() / pts.len() as f64;
        let expected = 1.0 / 10f64.tanh() - 0.1;
        assert_abs_diff_eq!(expected, 0.9000, epsilon = 1e-4);
        assert!((r - expected).abs() < 0.01);
    }

    #[test]
    fn vmf_higher_dimension_draws_are_unit() {
        let mut rng = rng_from_seed(5);
        let mu = SpherePoint::north_pole(9);
        for p in VonMisesFisher::new(mu, 5.0).unwrap().sample(100, &mut rng) {
            assert_abs_diff_eq!(norm(p.coords()), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_density_examples() {
        let mu = SpherePoint::north_pole(2);
        let uni = VonMisesFisher::new(mu.clone(), 0.0).unwrap();
        assert_abs_diff_eq!(vmf_log_density(&uni, &mu).unwrap(), -2.53102, epsilon = 1e-5);

        let d = VonMisesFisher::new(mu.clone(), 1.0).unwrap();
        let at_mu = vmf_log_density(&d, &mu).unwrap();
        let expected = (1f64.exp() / (4.0 * PI * 1f64.sinh())).ln();
        assert_abs_diff_eq!(at_mu, expected, epsilon = 1e-14);
        assert_abs_diff_eq!(at_mu, -1.6925, epsilon = 1e-4);
        let at_anti = vmf_log_density(&d, &SpherePoint::south_pole(2)).unwrap();
        assert_abs_diff_eq!(at_mu - at_anti, 2.0, epsilon = 1e-14);

        let d3 = VonMisesFisher::new(SpherePoint::north_pole(3), 1.0).unwrap();
        assert!(matches!(
            vmf_log_density(&d3, &SpherePoint::north_pole(3)),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn large_kappa_normalizer_is_finite() {
        let v = log_normalizer_s2(1000.0);
        assert!(v.is_finite());
        assert_abs_diff_eq!(v, 1000f64.ln() - (2.0 * PI).ln() - 1000.0, epsilon = 1e-12);
    }

    #[test]
    fn icosahedron_geometry() {
        let v = icosahedron_vertices();
        assert_eq!(v.len(), 12);
        // each vertex has exactly five nearest neighbours at the edge angle
        let edge = geodesic_distance(&v[0], &v[1]).unwrap().min(
            v.iter().skip(1).map(|w| geodesic_distance(&v[0], w).unwrap()).fold(f64::INFINITY, f64::min),
        );
        for a in &v {
            let close = v
                .iter()
                .filter(|b| (geodesic_distance(a, b).unwrap() - edge).abs() < 1e-9)
                .count();
            assert_eq!(close, 5);
        }
    }

    #[test]
    fn mixture_validation_and_density() {
        let mix = VmfMixture::icosahedral(50.0).unwrap();
        assert_eq!(mix.components().len(), 12);
        let mut rng = rng_from_seed(6);
        assert_eq!(mix.sample_stratified(3, &mut rng).len(), 36);
        assert_eq!(mix.sample(10, &mut rng).len(), 10);
        let c0 = mix.components()[0].mean_direction().clone();
        let ld = mix.log_density(&c0).unwrap();
        let single = vmf_log_density(&mix.components()[0], &c0).unwrap() - 12f64.ln();
        assert!(ld >= single);
        assert!(VmfMixture::new(vec![], vec![]).is_err());
        assert!(VmfMixture::new(mix.components().to_vec(), vec![0.5; 12]).is_err());
    }
}
