//! Wall-clock runtime sweeps.
//!
//! Timings come from the monotonic clock. Every cell runs one discarded
//! warm-up call followed by `reps` timed calls; summaries use the median.
//! ARI calls draw from a pool generated before the clock starts, and pool
//! generation is timed on its own and reported in the metadata.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::report::StudyReport;
use super::stats::median;
use crate::distance::{evaluate, EmpiricalMeasure, Method, MethodParams, S3WConfig};
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, derive_seed_tagged, rng_from_seed};
use crate::sphere::{build_pool, sample_uniform, CapEps, RotationPool, SpherePoint, VonMisesFisher};

/// The swept quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchSweep {
    /// Samples per measure.
    Samples,
    /// Number of projections `L`.
    Projections,
    /// Number of rotations `N_R`.
    Rotations,
}

impl BenchSweep {
    pub fn name(self) -> &'static str {
        match self {
            BenchSweep::Samples => "N",
            BenchSweep::Projections => "L",
            BenchSweep::Rotations => "n_rotations",
        }
    }
}

impl fmt::Display for BenchSweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchSweep {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" | "n" | "samples" => Ok(BenchSweep::Samples),
            "L" | "projections" => Ok(BenchSweep::Projections),
            "n_rotations" | "rotations" => Ok(BenchSweep::Rotations),
            _ => Err(invalid(format!("unknown benchmark sweep `{s}`"))),
        }
    }
}

/// Runtime sweep between the uniform distribution and vMF(e₁, κ) on 𝕊^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    pub sweep: BenchSweep,
    pub grid: Vec<usize>,
    pub d: usize,
    /// Samples per measure when not swept.
    pub n_samples: usize,
    pub n_projections: usize,
    pub n_rotations: usize,
    pub pool_size: usize,
    pub kappa: f64,
    /// Timed calls per cell, after one warm-up call.
    pub reps: usize,
    pub p: f64,
    pub eps: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::S3w, Method::RiS3w, Method::AriS3w],
            sweep: BenchSweep::Samples,
            grid: vec![100, 500, 1000, 2000, 3000],
            d: 2,
            n_samples: 500,
            n_projections: 200,
            n_rotations: 10,
            pool_size: 100,
            kappa: 10.0,
            reps: 5,
            p: 2.0,
            eps: CapEps::DEFAULT.value(),
        }
    }
}

impl BenchConfig {
    fn validate(&self) -> Result<()> {
        if self.reps < 3 {
            return Err(invalid("benchmarks need at least 3 timed repetitions"));
        }
        if self.methods.is_empty() || self.grid.is_empty() {
            return Err(invalid("benchmarks need at least one method and one grid value"));
        }
        if self.grid.contains(&0) {
            return Err(invalid("benchmark grid values must be >= 1"));
        }
        if self.d == 0 {
            return Err(invalid("sphere dimension must be >= 1"));
        }
        Ok(())
    }
}

/// Times every (method, grid value) cell. Values are seconds per call.
pub fn bench_runtime<R: Rng + ?Sized>(cfg: &BenchConfig, rng: &mut R) -> Result<StudyReport> {
    cfg.validate()?;
    let seed: u64 = rng.random();
    let target = VonMisesFisher::new(first_axis(cfg.d), cfg.kappa)?;
    let mut report = StudyReport::new("bench", &["method", cfg.sweep.name()]);
    let mut pool_seconds = Vec::new();
    for (gi, &g) in cfg.grid.iter().enumerate() {
        let (n, l, n_r) = match cfg.sweep {
            BenchSweep::Samples => (g, cfg.n_projections, cfg.n_rotations),
            BenchSweep::Projections => (cfg.n_samples, g, cfg.n_rotations),
            BenchSweep::Rotations => (cfg.n_samples, cfg.n_projections, g),
        };
        let cell_seed = derive_seed(seed, gi as u64);
        let mut data = rng_from_seed(derive_seed_tagged(cell_seed, "data"));
        let mu = EmpiricalMeasure::uniform(&sample_uniform(cfg.d, n, &mut data)?)?;
        let nu = EmpiricalMeasure::uniform(&target.sample(n, &mut data))?;
        let s3w_cfg = S3WConfig::new(cfg.p, l, cfg.eps)?;
        let params = MethodParams { n_rotations: n_r, pool_size: cfg.pool_size.max(n_r), ..MethodParams::default() };
        let pool = if cfg.methods.contains(&Method::AriS3w) {
            let mut prng = rng_from_seed(derive_seed_tagged(cell_seed, "pool"));
            let start = Instant::now();
            let pool = build_pool(cfg.d, params.pool_size, &mut prng)?;
            pool_seconds.push(start.elapsed().as_secs_f64());
            Some(pool)
        } else {
            None
        };
        for &method in &cfg.methods {
            let mut mrng = rng_from_seed(derive_seed_tagged(cell_seed, method.name()));
            let times = time_calls(cfg.reps, || {
                evaluate(method, &mu, &nu, &s3w_cfg, &params, pool.as_ref(), &mut mrng).map(|_| ())
            })?;
            report.push(vec![method.name().into(), g.into()], times)?;
        }
    }
    report.set_meta("seed", json!(seed));
    report.set_meta("config", serde_json::to_value(cfg).expect("config serializes"));
    report.set_meta("statistic", json!("median seconds per call; one warm-up call discarded"));
    report.set_meta("rayon_threads", json!(rayon::current_num_threads()));
    if !pool_seconds.is_empty() {
        report.set_meta("pool_seconds", json!(pool_seconds));
        report.set_meta("pool_seconds_median", json!(median(&pool_seconds)));
    }
    Ok(report)
}

/// Times `reps` calls of `f` after one untimed warm-up call.
pub fn time_calls(reps: usize, mut f: impl FnMut() -> Result<()>) -> Result<Vec<f64>> {
    f()?;
    (0..reps)
        .map(|_| {
            let start = Instant::now();
            f()?;
            Ok(start.elapsed().as_secs_f64())
        })
        .collect()
}

/// Seconds to pregenerate a pool of `size` rotations of ℝ^{d+1}, with the
/// pool itself.
pub fn time_pool_generation<R: Rng + ?Sized>(d: usize, size: usize, rng: &mut R) -> Result<(f64, RotationPool)> {
    let start = Instant::now();
    let pool = build_pool(d, size, rng)?;
    Ok((start.elapsed().as_secs_f64(), pool))
}

fn first_axis(d: usize) -> SpherePoint {
    let mut c = vec![0.0; d + 1];
    c[0] = 1.0;
    SpherePoint::from_unit(c).expect("basis vector")
}
