//! Parameter sweeps over the distance estimators.
//!
//! Repetition `r` of every sweep draws its samples and estimator randomness
//! from a stream derived from the base seed and `r` alone, so grid cells are
//! paired: cell differences are not blurred by independent sampling noise.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::metrics::kl_vmf_uniform;
use super::report::{ParamValue, StudyReport};
use super::stats::pearson;
use crate::distance::{evaluate, EmpiricalMeasure, Method, MethodParams, S3WConfig};
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, derive_seed_tagged, rng_from_seed};
use crate::sphere::{
    build_pool, embed, folded_embed_distance, geodesic_distance, sample_uniform, stereo_project, CapEps,
    SpherePoint, VonMisesFisher,
};

/// Knobs shared by the sweeps. Each sweep has its own defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySettings {
    pub methods: Vec<Method>,
    pub reps: usize,
    /// Sphere dimension `d` of 𝕊^d.
    pub d: usize,
    pub n_samples: usize,
    pub n_projections: usize,
    pub n_rotations: usize,
    pub pool_size: usize,
    pub kappa: f64,
    pub p: f64,
    pub eps: f64,
}

const S3W_FAMILY: [Method; 3] = [Method::S3w, Method::RiS3w, Method::AriS3w];

impl StudySettings {
    /// Two concentrated vMFs at opposite poles.
    pub fn eps_default() -> Self {
        Self {
            methods: S3W_FAMILY.to_vec(),
            reps: 100,
            d: 2,
            n_samples: 2048,
            n_projections: 128,
            n_rotations: 10,
            pool_size: 100,
            kappa: 50.0,
            p: 2.0,
            eps: CapEps::DEFAULT.value(),
        }
    }

    pub fn evolution_default(kind: EvolutionKind) -> Self {
        let base = Self {
            methods: S3W_FAMILY.to_vec(),
            reps: 20,
            d: 2,
            n_samples: 500,
            n_projections: 200,
            n_rotations: 10,
            pool_size: 100,
            kappa: 10.0,
            p: 2.0,
            eps: CapEps::DEFAULT.value(),
        };
        match kind {
            EvolutionKind::Kappa => Self { reps: 10, ..base },
            EvolutionKind::Angle => Self { reps: 100, ..base },
            EvolutionKind::Projections => Self { methods: vec![Method::S3w], ..base },
            EvolutionKind::Rotations => Self { methods: vec![Method::RiS3w], n_projections: 10, ..base },
            EvolutionKind::Pool => Self { methods: vec![Method::AriS3w], n_projections: 10, ..base },
            EvolutionKind::Samples => Self { reps: 50, n_projections: 1000, ..base },
        }
    }

    fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(invalid("a study needs at least one method"));
        }
        if self.reps == 0 {
            return Err(invalid("a study needs at least one repetition"));
        }
        if self.d == 0 {
            return Err(invalid("sphere dimension must be >= 1"));
        }
        if self.n_samples == 0 {
            return Err(invalid("sample size must be >= 1"));
        }
        if self.methods.contains(&Method::AriS3w) && self.pool_size < self.n_rotations {
            return Err(invalid("pool size must be at least the number of rotations"));
        }
        Ok(())
    }

    fn s3w_config(&self, n_projections: usize, eps: f64) -> Result<S3WConfig> {
        S3WConfig::new(self.p, n_projections, eps)
    }

    fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("settings serialize")
    }
}

/// The named one-parameter sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionKind {
    /// vMF(e₁, κ) against the uniform distribution, over κ.
    Kappa,
    /// vMF(e₁, κ) against vMF((cos θ, sin θ, 0, …), κ), over θ.
    Angle,
    /// Estimator spread over the number of projections, on fixed samples.
    Projections,
    /// Over the number of rotations, on fixed samples.
    Rotations,
    /// Over the rotation pool size, on fixed samples.
    Pool,
    /// Two vMFs at opposite poles, over the sample size.
    Samples,
}

impl EvolutionKind {
    pub const ALL: [EvolutionKind; 6] = [
        EvolutionKind::Kappa,
        EvolutionKind::Angle,
        EvolutionKind::Projections,
        EvolutionKind::Rotations,
        EvolutionKind::Pool,
        EvolutionKind::Samples,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EvolutionKind::Kappa => "kappa",
            EvolutionKind::Angle => "angle",
            EvolutionKind::Projections => "projections",
            EvolutionKind::Rotations => "rotations",
            EvolutionKind::Pool => "pool",
            EvolutionKind::Samples => "samples",
        }
    }

    /// Column name of the swept parameter.
    pub fn param(self) -> &'static str {
        match self {
            EvolutionKind::Kappa => "kappa",
            EvolutionKind::Angle => "theta",
            EvolutionKind::Projections => "L",
            EvolutionKind::Rotations => "n_rotations",
            EvolutionKind::Pool => "pool_size",
            EvolutionKind::Samples => "n",
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        match self {
            EvolutionKind::Kappa => {
                vec![1.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 75.0, 100.0, 150.0, 200.0, 250.0]
            }
            EvolutionKind::Angle => (0..=12).map(|k| k as f64 * PI / 6.0).collect(),
            EvolutionKind::Projections => vec![10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0],
            EvolutionKind::Rotations => vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
            EvolutionKind::Pool => vec![10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0],
            EvolutionKind::Samples => vec![10.0, 50.0, 100.0, 500.0, 1000.0, 2000.0],
        }
    }

    fn integer_grid(self) -> bool {
        !matches!(self, EvolutionKind::Kappa | EvolutionKind::Angle)
    }
}

impl fmt::Display for EvolutionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EvolutionKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        EvolutionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown evolution study `{s}`")))
    }
}

fn measure(points: &[SpherePoint]) -> Result<EmpiricalMeasure> {
    EmpiricalMeasure::uniform(points)
}

fn e1(d: usize) -> SpherePoint {
    let mut c = vec![0.0; d + 1];
    c[0] = 1.0;
    SpherePoint::from_unit(c).expect("basis vector")
}

/// One estimator call with its own randomness; ARI gets a pool drawn from a
/// separate stream of the same seed.
fn estimate(
    method: Method,
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    cfg: &S3WConfig,
    n_rotations: usize,
    pool_size: usize,
    seed: u64,
) -> Result<f64> {
    let params = MethodParams { n_rotations, pool_size, ..MethodParams::default() };
    let pool = if method == Method::AriS3w {
        Some(build_pool(mu.dim(), pool_size, &mut rng_from_seed(derive_seed_tagged(seed, "pool")))?)
    } else {
        None
    };
    evaluate(method, mu, nu, cfg, &params, pool.as_ref(), &mut rng_from_seed(seed))
}

/// Evaluates `f(cell, rep_seed)` for every cell and repetition in parallel and
/// returns the values grouped by cell, in order.
fn run_grid<F>(cells: usize, reps: usize, seed: u64, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(usize, u64) -> Result<f64> + Sync,
{
    let flat: Vec<f64> = (0..cells * reps)
        .into_par_iter()
        .map(|t| f(t / reps, derive_seed(seed, (t % reps) as u64)))
        .collect::<Result<_>>()?;
    Ok(flat.chunks(reps).map(<[f64]>::to_vec).collect())
}

/// Pearson correlation between the geodesic distance and three planar
/// distances on uniform pairs of 𝕊²: the raw stereographic images (`raw`),
/// the `h1`-corrected images (`h1`), and the folded length
/// `min(Δ, 2π - Δ)` (`folded`). One value per repetition.
pub fn distortion_study<R: Rng + ?Sized>(n_pairs: usize, reps: usize, rng: &mut R) -> Result<StudyReport> {
    if n_pairs < 2 || reps == 0 {
        return Err(invalid("distortion study needs >= 2 pairs and >= 1 repetition"));
    }
    let seed: u64 = rng.random();
    let variants = ["raw", "h1", "folded"];
    let eps = CapEps::DEFAULT;
    let per_rep: Vec<[f64; 3]> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(seed, r as u64));
            let a = sample_uniform(2, n_pairs, &mut rng)?;
            let b = sample_uniform(2, n_pairs, &mut rng)?;
            let mut geo = Vec::with_capacity(n_pairs);
            let mut cols: [Vec<f64>; 3] = Default::default();
            for (x, y) in a.iter().zip(&b) {
                geo.push(geodesic_distance(x, y)?);
                cols[0].push(euclid(&stereo_project(x)?, &stereo_project(y)?));
                cols[1].push(euclid(&embed(x, eps), &embed(y, eps)));
                cols[2].push(folded_embed_distance(x, y, eps)?);
            }
            Ok([pearson(&geo, &cols[0])?, pearson(&geo, &cols[1])?, pearson(&geo, &cols[2])?])
        })
        .collect::<Result<_>>()?;
    let mut report = StudyReport::new("distortion", &["variant"]);
    for (k, v) in variants.iter().enumerate() {
        report.push(vec![(*v).into()], per_rep.iter().map(|cc| cc[k]).collect())?;
    }
    report.set_meta("seed", json!(seed));
    report.set_meta("n_pairs", json!(n_pairs));
    report.set_meta("reps", json!(reps));
    report.set_meta("eps", json!(eps.value()));
    Ok(report)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Each estimator between vMF(south pole, κ) and vMF(north pole, κ) over a
/// grid of cap sizes. Samples are redrawn per repetition and shared across
/// the grid.
pub fn eps_stability_study<R: Rng + ?Sized>(
    eps_grid: &[f64],
    settings: &StudySettings,
    rng: &mut R,
) -> Result<StudyReport> {
    settings.validate()?;
    if eps_grid.is_empty() {
        return Err(invalid("eps grid is empty"));
    }
    if let Some(e) = eps_grid.iter().find(|e| !(**e > 0.0 && **e < 0.5)) {
        return Err(invalid(format!("eps grid values must lie in (0, 0.5), got {e}")));
    }
    let seed: u64 = rng.random();
    let s = settings;
    let cfgs = eps_grid.iter().map(|&e| s.s3w_config(s.n_projections, e)).collect::<Result<Vec<_>>>()?;
    let south = VonMisesFisher::new(SpherePoint::south_pole(s.d), s.kappa)?;
    let north = VonMisesFisher::new(SpherePoint::north_pole(s.d), s.kappa)?;
    let cells: Vec<(Method, usize)> =
        s.methods.iter().flat_map(|&m| (0..eps_grid.len()).map(move |i| (m, i))).collect();
    let values = run_grid(cells.len(), s.reps, seed, |c, rep_seed| {
        let (method, i) = cells[c];
        let mut data = rng_from_seed(derive_seed_tagged(rep_seed, "data"));
        let mu = measure(&south.sample(s.n_samples, &mut data))?;
        let nu = measure(&north.sample(s.n_samples, &mut data))?;
        estimate(method, &mu, &nu, &cfgs[i], s.n_rotations, s.pool_size, derive_seed_tagged(rep_seed, method.name()))
    })?;
    let mut report = StudyReport::new("eps", &["method", "eps"]);
    for ((m, i), v) in cells.iter().zip(values) {
        report.push(vec![m.name().into(), eps_grid[*i].into()], v)?;
    }
    report.set_meta("seed", json!(seed));
    report.set_meta("settings", s.echo());
    Ok(report)
}

/// Runs the sweep `kind` over `grid` for every method in `settings`.
///
/// The `kappa` sweep also reports the closed-form KL divergence to the
/// uniform distribution as the series `kl`.
pub fn evolution_study<R: Rng + ?Sized>(
    kind: EvolutionKind,
    grid: &[f64],
    settings: &StudySettings,
    rng: &mut R,
) -> Result<StudyReport> {
    settings.validate()?;
    if grid.is_empty() {
        return Err(invalid("grid is empty"));
    }
    if kind.integer_grid() {
        if let Some(g) = grid.iter().find(|g| !(**g >= 1.0 && g.fract() == 0.0)) {
            return Err(invalid(format!("the {kind} grid takes positive integers, got {g}")));
        }
    }
    if kind == EvolutionKind::Kappa {
        if let Some(g) = grid.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
            return Err(invalid(format!("kappa must be finite and >= 0, got {g}")));
        }
    }
    if kind == EvolutionKind::Pool {
        if let Some(g) = grid.iter().find(|g| (**g as usize) < settings.n_rotations) {
            return Err(invalid(format!("pool size {g} is below the {} rotations drawn", settings.n_rotations)));
        }
    }
    let seed: u64 = rng.random();
    let s = settings;
    let d = s.d;
    let mu0 = e1(d);
    let uniform = VonMisesFisher::uniform(d);
    let fixed_target = VonMisesFisher::new(mu0.clone(), s.kappa)?;
    // Estimator-spread sweeps hold the samples fixed so that only the
    // estimator randomness varies across repetitions.
    let fixed = match kind {
        EvolutionKind::Projections | EvolutionKind::Rotations | EvolutionKind::Pool => {
            let mut data = rng_from_seed(derive_seed_tagged(seed, "fixed-data"));
            let a = measure(&uniform.sample(s.n_samples, &mut data))?;
            let b = measure(&fixed_target.sample(s.n_samples, &mut data))?;
            Some((a, b))
        }
        _ => None,
    };
    let base_cfg = s.s3w_config(s.n_projections, s.eps)?;
    let cells: Vec<(Method, usize)> =
        s.methods.iter().flat_map(|&m| (0..grid.len()).map(move |i| (m, i))).collect();
    let values = run_grid(cells.len(), s.reps, seed, |c, rep_seed| {
        let (method, i) = cells[c];
        let g = grid[i];
        let method_seed = derive_seed_tagged(rep_seed, method.name());
        let mut data = rng_from_seed(derive_seed_tagged(rep_seed, "data"));
        match kind {
            EvolutionKind::Kappa => {
                let a = measure(&VonMisesFisher::new(mu0.clone(), g)?.sample(s.n_samples, &mut data))?;
                let b = measure(&uniform.sample(s.n_samples, &mut data))?;
                estimate(method, &a, &b, &base_cfg, s.n_rotations, s.pool_size, method_seed)
            }
            EvolutionKind::Angle => {
                let mut c = vec![0.0; d + 1];
                c[0] = g.cos();
                c[1] = g.sin();
                let moved = VonMisesFisher::new(SpherePoint::new(c)?, s.kappa)?;
                let a = measure(&fixed_target.sample(s.n_samples, &mut data))?;
                let b = measure(&moved.sample(s.n_samples, &mut data))?;
                estimate(method, &a, &b, &base_cfg, s.n_rotations, s.pool_size, method_seed)
            }
            EvolutionKind::Projections => {
                let (a, b) = fixed.as_ref().expect("fixed samples");
                let cfg = s.s3w_config(g as usize, s.eps)?;
                estimate(method, a, b, &cfg, s.n_rotations, s.pool_size, method_seed)
            }
            EvolutionKind::Rotations => {
                let (a, b) = fixed.as_ref().expect("fixed samples");
                let n_r = g as usize;
                estimate(method, a, b, &base_cfg, n_r, s.pool_size.max(n_r), method_seed)
            }
            EvolutionKind::Pool => {
                let (a, b) = fixed.as_ref().expect("fixed samples");
                estimate(method, a, b, &base_cfg, s.n_rotations, g as usize, method_seed)
            }
            EvolutionKind::Samples => {
                let n = g as usize;
                let north = VonMisesFisher::new(SpherePoint::north_pole(d), s.kappa)?;
                let south = VonMisesFisher::new(SpherePoint::south_pole(d), s.kappa)?;
                let a = measure(&north.sample(n, &mut data))?;
                let b = measure(&south.sample(n, &mut data))?;
                estimate(method, &a, &b, &base_cfg, s.n_rotations, s.pool_size, method_seed)
            }
        }
    })?;
    let mut report = StudyReport::new(kind.name(), &["method", kind.param()]);
    for ((m, i), v) in cells.iter().zip(values) {
        report.push(vec![m.name().into(), grid[*i].into()], v)?;
    }
    if kind == EvolutionKind::Kappa {
        for &k in grid {
            report.push(vec![ParamValue::from("kl"), k.into()], vec![kl_vmf_uniform(k, d)?])?;
        }
    }
    report.set_meta("seed", json!(seed));
    report.set_meta("settings", s.echo());
    report.set_meta("fixed_samples", json!(fixed.is_some()));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: EvolutionKind) -> StudySettings {
        StudySettings { reps: 3, n_samples: 60, n_projections: 20, ..StudySettings::evolution_default(kind) }
    }

    #[test]
    fn distortion_orders_variants() {
        let r = distortion_study(500, 2, &mut rng_from_seed(1)).unwrap();
        let cc = |v: &str| r.cell(&[v.into()]).unwrap().mean();
        assert!(cc("raw") < cc("h1"));
        assert!(cc("folded") > 0.8);
        let again = distortion_study(500, 2, &mut rng_from_seed(1)).unwrap();
        assert_eq!(r.to_csv(), again.to_csv());
    }

    #[test]
    fn eps_study_shape_and_validation() {
        let s = StudySettings { reps: 2, n_samples: 64, n_projections: 16, ..StudySettings::eps_default() };
        let r = eps_stability_study(&[1e-6, 1e-3, 1e-1], &s, &mut rng_from_seed(2)).unwrap();
        assert_eq!(r.cells.len(), 9);
        assert!(r.cells.iter().all(|c| c.values.len() == 2 && c.std().is_some()));
        assert!(eps_stability_study(&[0.6], &s, &mut rng_from_seed(2)).is_err());
        assert!(eps_stability_study(&[], &s, &mut rng_from_seed(2)).is_err());
    }

    #[test]
    fn every_kind_runs_and_is_deterministic() {
        for kind in EvolutionKind::ALL {
            let s = small(kind);
            let grid: Vec<f64> = kind.default_grid().into_iter().take(3).collect();
            let a = evolution_study(kind, &grid, &s, &mut rng_from_seed(3)).unwrap();
            let b = evolution_study(kind, &grid, &s, &mut rng_from_seed(3)).unwrap();
            assert_eq!(a.to_csv(), b.to_csv(), "{kind}");
            assert!(a.cells.len() >= grid.len());
        }
    }

    #[test]
    fn kappa_sweep_carries_kl() {
        let s = StudySettings { methods: vec![Method::S3w], ..small(EvolutionKind::Kappa) };
        let r = evolution_study(EvolutionKind::Kappa, &[1.0, 50.0], &s, &mut rng_from_seed(4)).unwrap();
        let kl = r.series("kl");
        assert_eq!(kl.len(), 2);
        assert!(kl[0].mean() < kl[1].mean());
        let s3w = r.series("s3w");
        assert!(s3w[0].mean() < s3w[1].mean());
    }

    #[test]
    fn rejects_bad_grids() {
        let s = small(EvolutionKind::Projections);
        assert!(evolution_study(EvolutionKind::Projections, &[2.5], &s, &mut rng_from_seed(5)).is_err());
        assert!(evolution_study(EvolutionKind::Projections, &[], &s, &mut rng_from_seed(5)).is_err());
        let s = small(EvolutionKind::Pool);
        assert!(evolution_study(EvolutionKind::Pool, &[5.0], &s, &mut rng_from_seed(5)).is_err());
        assert!("warp".parse::<EvolutionKind>().is_err());
    }
}
