use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::optim::apply_steps;
use super::{loss_and_grad, AdamState, Draws, GradOptions, LossKind, LossSpec, ParticleCloud, Retraction};
use crate::distance::EmpiricalMeasure;
use crate::error::{check_dim, invalid, Error, Result};
use crate::eval::{exact_w2_geodesic, nll, MAX_ASSIGNMENT_SIZE};
use crate::ot1d::Order;
use crate::rng::{derive_seed, derive_seed_tagged, rng_from_seed};
use crate::sphere::{build_pool, CapEps, VmfMixture};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

/// Number of rotations used at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationSchedule {
    Fixed(usize),
    /// Linear ramp from `from` at the first step to `to` at the last,
    /// rounded to the nearest integer.
    Linear { from: usize, to: usize },
}

impl RotationSchedule {
    pub fn at(self, step: usize, steps: usize) -> usize {
        match self {
            RotationSchedule::Fixed(n) => n,
            RotationSchedule::Linear { from, to } => {
                if steps <= 1 {
                    return from;
                }
                let t = step as f64 / (steps - 1) as f64;
                (from as f64 + (to as f64 - from as f64) * t).round() as usize
            }
        }
    }

    fn max(self) -> usize {
        match self {
            RotationSchedule::Fixed(n) => n,
            RotationSchedule::Linear { from, to } => from.max(to),
        }
    }

    fn min(self) -> usize {
        match self {
            RotationSchedule::Fixed(n) => n,
            RotationSchedule::Linear { from, to } => from.min(to),
        }
    }
}

/// Configuration of a particle gradient flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub loss: LossKind,
    pub p: Order,
    pub n_projections: usize,
    pub eps: CapEps,
    pub rotations: RotationSchedule,
    /// Pool size for ARI-S3W.
    pub pool_size: usize,
    pub steps: usize,
    pub lr: f64,
    /// Target mini-batch size; 0 uses the full target every step.
    pub batch: usize,
    pub optimizer: OptimizerKind,
    pub retraction: Retraction,
    pub seed: u64,
    pub n_particles: usize,
    /// Evaluate NLL and `log W₂` every this many steps (and at the last step);
    /// 0 evaluates at the last step only.
    pub eval_every: usize,
    /// Number of particles (and target points) used by the exact `W₂`
    /// evaluation; `None` uses the whole clouds.
    pub eval_subsample: Option<usize>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::S3w,
            p: Order::TWO,
            n_projections: 1000,
            eps: CapEps::DEFAULT,
            rotations: RotationSchedule::Fixed(1),
            pool_size: 1000,
            steps: 500,
            lr: 0.01,
            batch: 0,
            optimizer: OptimizerKind::Adam,
            retraction: Retraction::Normalize,
            seed: 0,
            n_particles: 2400,
            eval_every: 0,
            eval_subsample: Some(1000),
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(invalid("learning rate must be > 0"));
        }
        if self.n_projections == 0 {
            return Err(invalid("at least one projection is required"));
        }
        if self.n_particles == 0 {
            return Err(invalid("at least one particle is required"));
        }
        if self.loss.uses_rotations() && self.rotations.min() == 0 {
            return Err(invalid("rotation counts must be >= 1"));
        }
        if self.loss == LossKind::AriS3w && self.rotations.max() > self.pool_size {
            return Err(invalid(format!(
                "{} rotations requested from a pool of {}",
                self.rotations.max(),
                self.pool_size
            )));
        }
        if self.eval_subsample == Some(0) {
            return Err(invalid("evaluation subsample must be >= 1"));
        }
        Ok(())
    }
}

/// One step of a flow. `loss` is the Monte-Carlo loss evaluated before the
/// update of that step; `nll` and `log_w2` describe the cloud after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub step: usize,
    pub loss: f64,
    pub seconds: f64,
    pub nll: Option<f64>,
    pub log_w2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub rows: Vec<FlowRow>,
    pub initial_cloud: ParticleCloud,
    pub final_cloud: ParticleCloud,
    /// Particles left in place by degenerate retractions, over all steps.
    pub skipped: usize,
    /// Sort ties met while differentiating, over all steps.
    pub ties: usize,
    /// Particle evaluations inside the cap, over all steps.
    pub capped: usize,
    /// Seconds spent building the rotation pool (not part of step times).
    pub pool_seconds: f64,
}

impl FlowTrace {
    pub fn final_row(&self) -> Option<&FlowRow> {
        self.rows.last()
    }

    pub fn final_log_w2(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.log_w2)
    }

    /// CSV with columns `step,loss,cum_seconds,nll,log_w2`. Off-cadence
    /// metrics are empty; so is `cum_seconds` unless `timings` is set, which
    /// keeps the file reproducible byte for byte.
    pub fn to_csv(&self, timings: bool) -> String {
        let mut out = String::from("step,loss,cum_seconds,nll,log_w2\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        for r in &self.rows {
            let secs = if timings { format!("{:.6}", r.seconds) } else { String::new() };
            let _ = writeln!(out, "{},{:.16e},{},{},{}", r.step, r.loss, secs, opt(r.nll), opt(r.log_w2));
        }
        out
    }
}

struct Batcher {
    order: Vec<usize>,
    cursor: usize,
    rng: crate::rng::SeededRng,
}

impl Batcher {
    fn next(&mut self, size: usize) -> &[usize] {
        if self.cursor + size > self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        let out = &self.order[self.cursor..self.cursor + size];
        self.cursor += size;
        out
    }
}

/// Runs a flow from `n_particles` uniform particles (drawn from the
/// configuration seed) towards `target`.
pub fn run_flow(cfg: &FlowConfig, target: &EmpiricalMeasure, density: Option<&VmfMixture>) -> Result<FlowTrace> {
    cfg.validate()?;
    let mut rng = rng_from_seed(derive_seed_tagged(cfg.seed, "init"));
    let init = ParticleCloud::sample_uniform(target.dim(), cfg.n_particles, &mut rng)?;
    run_flow_from(cfg, init, target, density)
}

/// Runs a flow from a given initial cloud.
pub fn run_flow_from(
    cfg: &FlowConfig,
    init: ParticleCloud,
    target: &EmpiricalMeasure,
    density: Option<&VmfMixture>,
) -> Result<FlowTrace> {
    cfg.validate()?;
    check_dim(target.dim(), init.dim())?;
    if cfg.batch > target.len() {
        return Err(invalid(format!("batch {} exceeds the {} target points", cfg.batch, target.len())));
    }
    let eval_size = init.len().min(target.len()).min(cfg.eval_subsample.unwrap_or(usize::MAX));
    if eval_size > MAX_ASSIGNMENT_SIZE {
        return Err(Error::Capacity(format!(
            "W2 evaluation on {eval_size} points exceeds {MAX_ASSIGNMENT_SIZE}; set an evaluation subsample"
        )));
    }
    let d = target.dim();
    let pool_start = Instant::now();
    let pool = if cfg.loss == LossKind::AriS3w {
        Some(build_pool(d, cfg.pool_size, &mut rng_from_seed(derive_seed_tagged(cfg.seed, "pool")))?)
    } else {
        None
    };
    let pool_seconds = pool_start.elapsed().as_secs_f64();
    let mut draw_rng = rng_from_seed(derive_seed_tagged(cfg.seed, "draws"));
    let mut batcher = Batcher {
        order: (0..target.len()).collect(),
        cursor: target.len(),
        rng: rng_from_seed(derive_seed_tagged(cfg.seed, "batch")),
    };
    let eval_seed = derive_seed_tagged(cfg.seed, "eval");

    let mut cloud = init.clone();
    let mut adam = AdamState::for_cloud(&cloud);
    let mut rows = Vec::with_capacity(cfg.steps);
    let (mut skipped, mut ties, mut capped) = (0, 0, 0);
    let mut elapsed = 0.0;
    for step in 0..cfg.steps {
        let start = Instant::now();
        let spec = LossSpec {
            kind: cfg.loss,
            p: cfg.p,
            eps: cfg.eps,
            n_projections: cfg.n_projections,
            n_rotations: cfg.rotations.at(step, cfg.steps),
        };
        let draws = Draws::sample(&spec, d, pool.as_ref(), &mut draw_rng)?;
        let batch_measure;
        let tgt = if cfg.batch > 0 && cfg.batch < target.len() {
            let idx = batcher.next(cfg.batch);
            batch_measure = subsample_measure(target, idx);
            &batch_measure
        } else {
            target
        };
        let out = loss_and_grad(cloud.coords(), tgt, &spec, &draws, GradOptions::default())?;
        ties += out.ties;
        capped += out.capped;
        let report = match cfg.optimizer {
            OptimizerKind::Adam => {
                let steps = adam.update(&out.grad, cfg.lr);
                apply_steps(&mut cloud, &steps, cfg.retraction)
            }
            OptimizerKind::Sgd => {
                let steps: Vec<f64> = out.grad.iter().map(|g| -cfg.lr * g).collect();
                apply_steps(&mut cloud, &steps, cfg.retraction)
            }
        };
        skipped += report.skipped;
        elapsed += start.elapsed().as_secs_f64();

        let number = step + 1;
        let evaluate = number == cfg.steps || (cfg.eval_every > 0 && number % cfg.eval_every == 0);
        let (nll_v, log_w2) = if evaluate {
            let nll_v = match density {
                Some(mix) if mix.dim() == 2 => Some(nll(&cloud, mix)?),
                _ => None,
            };
            let w2 = eval_w2(&cloud, target, cfg.eval_subsample, derive_seed(eval_seed, number as u64))?;
            (nll_v, Some(w2.ln()))
        } else {
            (None, None)
        };
        rows.push(FlowRow { step: number, loss: out.loss, seconds: elapsed, nll: nll_v, log_w2 });
    }
    Ok(FlowTrace { rows, initial_cloud: init, final_cloud: cloud, skipped, ties, capped, pool_seconds })
}

fn subsample_measure(m: &EmpiricalMeasure, idx: &[usize]) -> EmpiricalMeasure {
    let a = m.ambient_dim();
    let mut coords = Vec::with_capacity(idx.len() * a);
    for &i in idx {
        coords.extend_from_slice(&m.coords()[i * a..(i + 1) * a]);
    }
    EmpiricalMeasure::from_flat(m.dim(), coords, None).expect("rows of a valid measure")
}

/// Exact geodesic `W₂` between the cloud and the target on equal-size
/// subsamples of at most `limit` points (uniformly drawn without
/// replacement from the larger side(s)).
pub fn eval_w2(cloud: &ParticleCloud, target: &EmpiricalMeasure, limit: Option<usize>, seed: u64) -> Result<f64> {
    let n = cloud.len();
    let m = target.len();
    let size = n.min(m).min(limit.unwrap_or(usize::MAX));
    let mut rng = rng_from_seed(seed);
    let a = if size < n {
        let mut idx = rand::seq::index::sample(&mut rng, n, size).into_vec();
        idx.sort_unstable();
        cloud.select(&idx).to_measure()
    } else {
        cloud.to_measure()
    };
    let b = if size < m {
        let mut idx = rand::seq::index::sample(&mut rng, m, size).into_vec();
        idx.sort_unstable();
        subsample_measure(target, &idx)
    } else {
        subsample_measure(target, &(0..m).collect::<Vec<_>>())
    };
    exact_w2_geodesic(&a, &b)
}
