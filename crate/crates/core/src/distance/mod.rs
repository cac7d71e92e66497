//! The sliced distance family on 𝕊^d.
//!
//! All estimators share one pattern: lift both measures into a Euclidean
//! space, push them through random one-dimensional projections, and average
//! the 1-D transport costs.
//!
//! | estimator | lift | directions | rotations |
//! |-----------|------|------------|-----------|
//! | [`s3w`] | `embed` into ℝ^d | 𝕊^{d-1} | none |
//! | [`ri_s3w`] | `embed` | fresh per rotation | Haar, fresh per call |
//! | [`ari_s3w`] | `embed` | fresh per rotation | drawn from a [`RotationPool`] |
//! | [`max_s3w`] | `embed` | best of candidates | none |
//! | [`sw_ambient`] | identity in ℝ^{d+1} | 𝕊^d | none |
//! | [`vsw`] | identity | equator of 𝕊^d | none |
//!
//! Every function returns the p-th root (a distance); the `_pow` variants
//! return the p-th power, which is what the gradient flows minimize.

pub(crate) mod engine;
mod measure;
mod projection;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use measure::EmpiricalMeasure;
pub(crate) use measure::renormalize_rows;
pub use projection::ProjectionSet;

use crate::error::{check_dim, invalid, Error, Result};
use crate::ot1d::{Order, WeightedSamples1D};
use crate::sphere::{embed, sample_rotation, CapEps, Rotation, RotationPool};
use crate::sum::{mean, pairwise_sum};
use engine::{lift_measure, slice_costs, slice_costs_many, Lift, Lifted};

/// Parameters shared by the S3W estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S3WConfig {
    /// Transport order `p >= 1`.
    pub p: Order,
    /// Number of slicing directions `L` (per rotation for RI/ARI).
    pub n_projections: usize,
    /// Cap around the north pole.
    pub eps: CapEps,
    /// Embedding dimension; `None` means `d`, the only value `h1` supports.
    pub d_prime: Option<usize>,
    /// Seed recorded with results that used this configuration.
    pub seed: u64,
    /// Share one projection set across all rotations instead of drawing a
    /// fresh set per rotation.
    pub reuse_projections: bool,
}

impl Default for S3WConfig {
    fn default() -> Self {
        Self {
            p: Order::TWO,
            n_projections: 100,
            eps: CapEps::DEFAULT,
            d_prime: None,
            seed: 0,
            reuse_projections: false,
        }
    }
}

impl S3WConfig {
    pub fn new(p: f64, n_projections: usize, eps: f64) -> Result<Self> {
        if n_projections < 1 {
            return Err(invalid("at least one projection is required"));
        }
        Ok(Self {
            p: Order::new(p)?,
            n_projections,
            eps: CapEps::new(eps)?,
            ..Self::default()
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_reused_projections(mut self, reuse: bool) -> Self {
        self.reuse_projections = reuse;
        self
    }

    fn embed_dim(&self, d: usize) -> Result<usize> {
        match self.d_prime {
            None => Ok(d),
            Some(dp) if dp == d => Ok(d),
            Some(dp) => Err(Error::UnsupportedFeature(format!(
                "embedding dimension {dp} != sphere dimension {d}; the analytic embedding keeps d' = d"
            ))),
        }
    }

    fn lift(&self) -> Lift {
        Lift::Embed { eps: self.eps.value() }
    }
}

fn check_pair(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<()> {
    check_dim(mu.dim(), nu.dim())
}

/// The one-dimensional pushforward of `m` along `theta` after embedding.
pub fn slice(m: &EmpiricalMeasure, theta: &[f64], eps: CapEps) -> Result<WeightedSamples1D> {
    check_dim(m.dim(), theta.len())?;
    let values = m
        .points()
        .iter()
        .map(|s| embed(s, eps).iter().zip(theta).map(|(a, b)| a * b).sum())
        .collect();
    WeightedSamples1D::new(values, m.weights().to_vec())
}

/// `S3W_p^p` on a fixed projection set.
pub fn s3w_pow(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cfg: &S3WConfig, proj: &ProjectionSet) -> Result<f64> {
    check_pair(mu, nu)?;
    check_dim(cfg.embed_dim(mu.dim())?, proj.dim())?;
    let a = lift_measure(mu, None, cfg.lift());
    let b = lift_measure(nu, None, cfg.lift());
    Ok(mean(&slice_costs(&a, &b, proj.flat(), cfg.p)))
}

/// Stereographic spherical sliced Wasserstein distance on a fixed projection
/// set: `((1/L) Σ_l W_p^p(slice(μ, θ_l), slice(ν, θ_l)))^{1/p}`.
pub fn s3w(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cfg: &S3WConfig, proj: &ProjectionSet) -> Result<f64> {
    Ok(cfg.p.root(s3w_pow(mu, nu, cfg, proj)?))
}

/// Per-rotation `S3W_p^p` values for the given rotations. Projections are
/// drawn from `rng` (one set per rotation, or one shared set).
pub fn per_rotation_s3w_pow<R: Rng + ?Sized>(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    cfg: &S3WConfig,
    rotations: &[&Rotation],
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_pair(mu, nu)?;
    let k = cfg.embed_dim(mu.dim())?;
    if rotations.is_empty() {
        return Err(invalid("at least one rotation is required"));
    }
    let projections = draw_projection_sets(k, cfg, rotations.len(), rng)?;
    let lifted: Vec<(Lifted, Lifted)> = rotations
        .iter()
        .map(|r| {
            check_dim(mu.ambient_dim(), r.ambient_dim())?;
            let ra = rotate_and_renormalize(r, mu.coords(), mu.ambient_dim());
            let rb = rotate_and_renormalize(r, nu.coords(), nu.ambient_dim());
            Ok((
                lift_measure(mu, Some(&ra), cfg.lift()),
                lift_measure(nu, Some(&rb), cfg.lift()),
            ))
        })
        .collect::<Result<_>>()?;
    let groups: Vec<(&Lifted, &Lifted, &[f64])> = lifted
        .iter()
        .zip(&projections)
        .map(|((a, b), proj)| (a, b, proj.flat()))
        .collect();
    Ok(slice_costs_many(&groups, cfg.p).iter().map(|c| mean(c)).collect())
}

pub(crate) fn rotate_and_renormalize(r: &Rotation, coords: &[f64], m: usize) -> Vec<f64> {
    let mut out = r.rotate_flat(coords);
    renormalize_rows(&mut out, m);
    out
}

pub(crate) fn draw_projection_sets<R: Rng + ?Sized>(
    k: usize,
    cfg: &S3WConfig,
    count: usize,
    rng: &mut R,
) -> Result<Vec<ProjectionSet>> {
    if cfg.reuse_projections {
        let shared = ProjectionSet::sample(k, cfg.n_projections, rng)?;
        Ok(vec![shared; count])
    } else {
        (0..count).map(|_| ProjectionSet::sample(k, cfg.n_projections, rng)).collect()
    }
}

/// RI-S3W over an explicit list of rotations: the mean over rotations of
/// `S3W_p(R_# μ, R_# ν)`.
pub fn ri_s3w_with_rotations<R: Rng + ?Sized>(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    cfg: &S3WConfig,
    rotations: &[&Rotation],
    rng: &mut R,
) -> Result<f64> {
    let pows = per_rotation_s3w_pow(mu, nu, cfg, rotations, rng)?;
    let roots: Vec<f64> = pows.iter().map(|v| cfg.p.root(*v)).collect();
    Ok(mean(&roots))
}

/// Rotation-invariant S3W with `n_rotations` fresh Haar rotations.
pub fn ri_s3w<R: Rng + ?Sized>(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    cfg: &S3WConfig,
    n_rotations: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_rotations < 1 {
        return Err(invalid("at least one rotation is required"));
    }
    let rotations = (0..n_rotations)
        .map(|_| sample_rotation(mu.dim(), rng))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Rotation> = rotations.iter().collect();
    ri_s3w_with_rotations(mu, nu, cfg, &refs, rng)
}

/// Amortized RI-S3W: rotations are subsampled without replacement from a
/// pregenerated pool.
pub fn ari_s3w<R: Rng + ?Sized>(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    cfg: &S3WConfig,
    n_rotations: usize,
    pool: &RotationPool,
    rng: &mut R,
) -> Result<f64> {
    check_dim(mu.ambient_dim(), pool.ambient_dim())?;
    let rotations = pool.subsample(n_rotations, rng)?;
    ri_s3w_with_rotations(mu, nu, cfg, &rotations, rng)
}

/// Max-S3W on a fixed candidate set: the largest per-slice `W_p`.
pub fn max_s3w_with(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cfg: &S3WConfig, candidates: &ProjectionSet) -> Result<f64> {
    check_pair(mu, nu)?;
    check_dim(cfg.embed_dim(mu.dim())?, candidates.dim())?;
    let a = lift_measure(mu, None, cfg.lift());
    let b = lift_measure(nu, None, cfg.lift());
    let costs = slice_costs(&a, &b, candidates.flat(), cfg.p);
    Ok(cfg.p.root(costs.iter().cloned().fold(0.0, f64::max)))
}

/// Max-S3W by best-of-`candidates` random directions; a Monte-Carlo lower
/// bound on the supremum over all directions.
pub fn max_s3w<R: Rng + ?Sized>(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    cfg: &S3WConfig,
    candidates: usize,
    rng: &mut R,
) -> Result<f64> {
    let k = cfg.embed_dim(mu.dim())?;
    let dirs = ProjectionSet::sample(k, candidates, rng)?;
    max_s3w_with(mu, nu, cfg, &dirs)
}

/// Sliced Wasserstein on ambient coordinates for a fixed direction set in
/// ℝ^{d+1}.
pub fn sliced_ambient_pow(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, p: Order, proj: &ProjectionSet) -> Result<f64> {
    check_pair(mu, nu)?;
    check_dim(mu.ambient_dim(), proj.dim())?;
    let a = lift_measure(mu, None, Lift::Identity);
    let b = lift_measure(nu, None, Lift::Identity);
    Ok(mean(&slice_costs(&a, &b, proj.flat(), p)))
}

/// Classic sliced Wasserstein with directions uniform on 𝕊^d ⊂ ℝ^{d+1}.
pub fn sw_ambient<R: Rng + ?Sized>(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    p: f64,
    n_projections: usize,
    rng: &mut R,
) -> Result<f64> {
    let p = Order::new(p)?;
    let proj = ProjectionSet::sample(mu.ambient_dim(), n_projections, rng)?;
    Ok(p.root(sliced_ambient_pow(mu, nu, p, &proj)?))
}

/// Vertical sliced Wasserstein: ambient slicing restricted to equatorial
/// directions (`θ_{d+1} = 0`).
pub fn vsw<R: Rng + ?Sized>(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    p: f64,
    n_projections: usize,
    rng: &mut R,
) -> Result<f64> {
    if mu.dim() < 2 {
        return Err(Error::UnsupportedDimension {
            found: mu.dim(),
            reason: "vertical slicing needs d >= 2",
        });
    }
    let p = Order::new(p)?;
    let proj = ProjectionSet::sample_equator(mu.ambient_dim(), n_projections, rng)?;
    Ok(p.root(sliced_ambient_pow(mu, nu, p, &proj)?))
}

/// Names of the available estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    S3w,
    RiS3w,
    AriS3w,
    MaxS3w,
    Sw,
    Vsw,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::S3w,
        Method::RiS3w,
        Method::AriS3w,
        Method::MaxS3w,
        Method::Sw,
        Method::Vsw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::S3w => "s3w",
            Method::RiS3w => "ri_s3w",
            Method::AriS3w => "ari_s3w",
            Method::MaxS3w => "max_s3w",
            Method::Sw => "sw",
            Method::Vsw => "vsw",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown method `{s}`")))
    }
}

/// Method-specific knobs beyond [`S3WConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    pub n_rotations: usize,
    pub pool_size: usize,
    pub candidates: usize,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self { n_rotations: 10, pool_size: 100, candidates: 1000 }
    }
}

/// Evaluates `method` with fresh randomness from `rng`. ARI draws from
/// `pool`, which must be given for that method.
pub fn evaluate<R: Rng + ?Sized>(
    method: Method,
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    cfg: &S3WConfig,
    params: &MethodParams,
    pool: Option<&RotationPool>,
    rng: &mut R,
) -> Result<f64> {
    match method {
        Method::S3w => {
            let proj = ProjectionSet::sample(cfg.embed_dim(mu.dim())?, cfg.n_projections, rng)?;
            s3w(mu, nu, cfg, &proj)
        }
        Method::RiS3w => ri_s3w(mu, nu, cfg, params.n_rotations, rng),
        Method::AriS3w => {
            let pool = pool.ok_or_else(|| invalid("ari_s3w needs a rotation pool"))?;
            ari_s3w(mu, nu, cfg, params.n_rotations, pool, rng)
        }
        Method::MaxS3w => max_s3w(mu, nu, cfg, params.candidates, rng),
        Method::Sw => sw_ambient(mu, nu, cfg.p.value(), cfg.n_projections, rng),
        Method::Vsw => vsw(mu, nu, cfg.p.value(), cfg.n_projections, rng),
    }
}

/// Total mass check used by tests and callers that build slices by hand.
pub fn slice_mass(s: &WeightedSamples1D) -> f64 {
    pairwise_sum(s.weights())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::sphere::{build_pool, sample_uniform, SpherePoint};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn point_mass(c: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::uniform(&[SpherePoint::new(c.to_vec()).unwrap()]).unwrap()
    }

    fn random_measure(n: usize, seed: u64) -> EmpiricalMeasure {
        EmpiricalMeasure::uniform(&sample_uniform(2, n, &mut rng_from_seed(seed)).unwrap()).unwrap()
    }

    #[test]
    fn slice_examples() {
        let south = point_mass(&[0.0, 0.0, -1.0]);
        let s = slice(&south, &[0.6, 0.8], CapEps::DEFAULT).unwrap();
        assert_eq!(s.values(), &[0.0]);
        let eq = point_mass(&[1.0, 0.0, 0.0]);
        let s = slice(&eq, &[1.0, 0.0], CapEps::DEFAULT).unwrap();
        assert_abs_diff_eq!(s.values()[0], PI / 2.0, epsilon = 1e-15);
        let pts = sample_uniform(2, 3, &mut rng_from_seed(1)).unwrap();
        let m = EmpiricalMeasure::weighted(&pts, vec![0.2, 0.3, 0.5]).unwrap();
        let s = slice(&m, &[0.0, 1.0], CapEps::DEFAULT).unwrap();
        assert_eq!(s.weights(), &[0.2, 0.3, 0.5]);
        assert_abs_diff_eq!(slice_mass(&s), 1.0);
        assert!(slice(&m, &[1.0, 0.0, 0.0], CapEps::DEFAULT).is_err());
    }

    #[test]
    fn s3w_identity_and_symmetry() {
        let mu = random_measure(50, 2);
        let nu = random_measure(50, 3);
        let cfg = S3WConfig::default();
        let proj = ProjectionSet::sample(2, 64, &mut rng_from_seed(4)).unwrap();
        assert_eq!(s3w(&mu, &mu, &cfg, &proj).unwrap(), 0.0);
        assert_eq!(s3w(&mu, &nu, &cfg, &proj).unwrap(), s3w(&nu, &mu, &cfg, &proj).unwrap());
    }

    #[test]
    fn s3w_point_masses_closed_form() {
        let a = point_mass(&[0.0, 0.0, -1.0]);
        let b = point_mass(&[1.0, 0.0, 0.0]);
        let cfg = S3WConfig::new(2.0, 100_000, 1e-6).unwrap();
        let proj = ProjectionSet::sample(2, 100_000, &mut rng_from_seed(5)).unwrap();
        let v = s3w(&a, &b, &cfg, &proj).unwrap();
        let expected = PI / (2.0 * 2f64.sqrt());
        assert!((v - expected).abs() / expected < 0.01);
    }

    #[test]
    fn weighted_and_unequal_paths() {
        let pts = sample_uniform(2, 5, &mut rng_from_seed(6)).unwrap();
        let uni = EmpiricalMeasure::uniform(&pts).unwrap();
        let wtd = EmpiricalMeasure::weighted(&pts, vec![0.2; 5]).unwrap();
        let other = random_measure(7, 7);
        let cfg = S3WConfig::default();
        let proj = ProjectionSet::sample(2, 32, &mut rng_from_seed(8)).unwrap();
        let a = s3w(&uni, &other, &cfg, &proj).unwrap();
        let b = s3w(&wtd, &other, &cfg, &proj).unwrap();
        assert!(a > 0.0);
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);

        // non-uniform weights route through the CDF merge
        let skew = EmpiricalMeasure::weighted(&pts, vec![0.6, 0.1, 0.1, 0.1, 0.1]).unwrap();
        let c = s3w(&skew, &other, &cfg, &proj).unwrap();
        let d = s3w(&other, &skew, &cfg, &proj).unwrap();
        assert_abs_diff_eq!(c, d, epsilon = 1e-12);
    }

    #[test]
    fn ri_with_identity_matches_s3w() {
        let mu = random_measure(40, 9);
        let nu = random_measure(40, 10);
        let cfg = S3WConfig::default();
        let proj = ProjectionSet::sample(2, cfg.n_projections, &mut rng_from_seed(11)).unwrap();
        let plain = s3w(&mu, &nu, &cfg, &proj).unwrap();
        let id = Rotation::identity(3);
        let ri = ri_s3w_with_rotations(&mu, &nu, &cfg, &[&id], &mut rng_from_seed(11)).unwrap();
        assert_eq!(plain, ri);
        assert_eq!(ri_s3w(&mu, &mu, &cfg, 5, &mut rng_from_seed(1)).unwrap(), 0.0);
    }

    #[test]
    fn ari_is_deterministic_and_validates_pool() {
        let mu = random_measure(30, 12);
        let nu = random_measure(30, 13);
        let cfg = S3WConfig::default();
        let pool = build_pool(2, 20, &mut rng_from_seed(14)).unwrap();
        let a = ari_s3w(&mu, &nu, &cfg, 5, &pool, &mut rng_from_seed(15)).unwrap();
        let b = ari_s3w(&mu, &nu, &cfg, 5, &pool, &mut rng_from_seed(15)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(ari_s3w(&mu, &mu, &cfg, 5, &pool, &mut rng_from_seed(15)).unwrap(), 0.0);
        assert!(ari_s3w(&mu, &nu, &cfg, 21, &pool, &mut rng_from_seed(15)).is_err());
    }

    #[test]
    fn whole_pool_matches_explicit_rotations() {
        let mu = random_measure(30, 16);
        let nu = random_measure(30, 17);
        let cfg = S3WConfig::default().with_reused_projections(true);
        let pool = build_pool(2, 4, &mut rng_from_seed(18)).unwrap();
        // with shared projections the result is order independent
        let ari = ari_s3w(&mu, &nu, &cfg, 4, &pool, &mut rng_from_seed(19)).unwrap();
        let mut rng = rng_from_seed(19);
        let _ = pool.subsample_indices(4, &mut rng).unwrap();
        let all: Vec<&Rotation> = pool.rotations().iter().collect();
        let ri = ri_s3w_with_rotations(&mu, &nu, &cfg, &all, &mut rng).unwrap();
        assert_abs_diff_eq!(ari, ri, epsilon = 1e-12);
    }

    #[test]
    fn max_dominates_mean() {
        let mu = random_measure(30, 20);
        let nu = random_measure(30, 21);
        let cfg = S3WConfig::default();
        let proj = ProjectionSet::sample(2, 50, &mut rng_from_seed(22)).unwrap();
        let m = max_s3w_with(&mu, &nu, &cfg, &proj).unwrap();
        assert!(m >= s3w(&mu, &nu, &cfg, &proj).unwrap());
        assert!(max_s3w_with(&mu, &nu, &cfg, &proj.truncated(10)).unwrap() <= m);
        assert_eq!(max_s3w(&mu, &mu, &cfg, 10, &mut rng_from_seed(1)).unwrap(), 0.0);
    }

    #[test]
    fn ambient_baselines() {
        let a = point_mass(&[0.0, 0.0, 1.0]);
        let b = point_mass(&[0.0, 0.0, -1.0]);
        assert_eq!(vsw(&a, &b, 2.0, 100, &mut rng_from_seed(1)).unwrap(), 0.0);
        let x = point_mass(&[1.0, 0.0, 0.0]);
        let v = sw_ambient(&x, &b, 2.0, 100_000, &mut rng_from_seed(2)).unwrap();
        let expected = 2f64.sqrt() / 3f64.sqrt();
        assert!((v - expected).abs() / expected < 0.01);
        let circle = EmpiricalMeasure::uniform(&[SpherePoint::new(vec![1.0, 0.0]).unwrap()]).unwrap();
        assert!(matches!(
            vsw(&circle, &circle, 2.0, 10, &mut rng_from_seed(3)),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn dimension_checks() {
        let a = point_mass(&[0.0, 0.0, 1.0]);
        let b = point_mass(&[0.0, 0.0, 0.0, 1.0]);
        let cfg = S3WConfig::default();
        let proj = ProjectionSet::sample(2, 4, &mut rng_from_seed(1)).unwrap();
        assert!(matches!(s3w(&a, &b, &cfg, &proj), Err(Error::DimensionMismatch { .. })));
        let mut bad = cfg.clone();
        bad.d_prime = Some(5);
        assert!(matches!(s3w(&a, &a, &bad, &proj), Err(Error::UnsupportedFeature(_))));
        assert_eq!("ari_s3w".parse::<Method>().unwrap(), Method::AriS3w);
        assert!("nope".parse::<Method>().is_err());
    }
}
