//! Analytic particle gradients of the sliced losses, spherical optimizers and
//! the gradient-flow driver.
//!
//! The gradient holds the random draws (rotations and directions) fixed and
//! differentiates the Monte-Carlo loss. Within a slice the sorted matching is
//! frozen, so a particle matched to target atom `j` receives
//! `mass · c'(⟨e_i, θ⟩ - v_j) · θ / L` in embedding space, which is pulled
//! back through the Jacobian of `embed` (and `Rᵀ` for rotated terms).

mod cloud;
mod flow;
mod jacobian;
mod optim;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cloud::ParticleCloud;
pub use flow::{eval_w2, run_flow, run_flow_from, FlowConfig, FlowRow, FlowTrace, OptimizerKind, RotationSchedule};
pub use jacobian::{embed_jacobian, EmbedJacobian, JacobianStatus};
pub use optim::{adam_step_projected, pgd_step, AdamState, Retraction, StepReport};

use crate::distance::engine::{for_each_uniform_segment, project, SliceScratch};
use crate::distance::{EmpiricalMeasure, ProjectionSet, S3WConfig};
use crate::error::{check_dim, invalid, Error, Result};
use crate::ot1d::Order;
use crate::sort::{sort_indexed, sorted_into};
use crate::sphere::{embed_into, sample_rotation, CapEps, Rotation, RotationPool};
use crate::sum::{pairwise_sum, pairwise_sum_buffers};
use jacobian::embed_vjp;

/// Loss functions a flow can minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    S3w,
    RiS3w,
    AriS3w,
    Sw,
    Vsw,
}

impl LossKind {
    pub const ALL: [LossKind; 5] = [LossKind::S3w, LossKind::RiS3w, LossKind::AriS3w, LossKind::Sw, LossKind::Vsw];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::S3w => "s3w",
            LossKind::RiS3w => "ri_s3w",
            LossKind::AriS3w => "ari_s3w",
            LossKind::Sw => "sw",
            LossKind::Vsw => "vsw",
        }
    }

    pub fn uses_rotations(self) -> bool {
        matches!(self, LossKind::RiS3w | LossKind::AriS3w)
    }

    fn embeds(self) -> bool {
        !matches!(self, LossKind::Sw | LossKind::Vsw)
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown loss `{s}`")))
    }
}

/// Loss family and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    pub p: Order,
    pub eps: CapEps,
    pub n_projections: usize,
    /// Rotations per evaluation (RI/ARI only).
    pub n_rotations: usize,
}

impl LossSpec {
    pub fn new(kind: LossKind, p: f64, n_projections: usize) -> Result<Self> {
        if n_projections == 0 {
            return Err(invalid("at least one projection is required"));
        }
        Ok(Self { kind, p: Order::new(p)?, eps: CapEps::DEFAULT, n_projections, n_rotations: 1 })
    }

    pub fn with_rotations(mut self, n_rotations: usize) -> Self {
        self.n_rotations = n_rotations;
        self
    }

    pub fn with_eps(mut self, eps: CapEps) -> Self {
        self.eps = eps;
        self
    }
}

/// Random draws that define one Monte-Carlo evaluation of a loss.
///
/// Without rotations there is exactly one projection set; otherwise there is
/// one projection set per rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct Draws {
    pub rotations: Vec<Rotation>,
    pub projections: Vec<ProjectionSet>,
}

impl Draws {
    /// Draws in the same order as the corresponding distance functions, so
    /// that a shared seed reproduces their projections and rotations.
    pub fn sample<R: Rng + ?Sized>(spec: &LossSpec, d: usize, pool: Option<&RotationPool>, rng: &mut R) -> Result<Self> {
        let l = spec.n_projections;
        match spec.kind {
            LossKind::S3w => Ok(Self { rotations: vec![], projections: vec![ProjectionSet::sample(d, l, rng)?] }),
            LossKind::Sw => Ok(Self { rotations: vec![], projections: vec![ProjectionSet::sample(d + 1, l, rng)?] }),
            LossKind::Vsw => {
                if d < 2 {
                    return Err(Error::UnsupportedDimension { found: d, reason: "vertical slicing needs d >= 2" });
                }
                Ok(Self { rotations: vec![], projections: vec![ProjectionSet::sample_equator(d + 1, l, rng)?] })
            }
            LossKind::RiS3w | LossKind::AriS3w => {
                if spec.n_rotations == 0 {
                    return Err(invalid("at least one rotation is required"));
                }
                let rotations = if spec.kind == LossKind::RiS3w {
                    (0..spec.n_rotations).map(|_| sample_rotation(d, rng)).collect::<Result<Vec<_>>>()?
                } else {
                    let pool = pool.ok_or_else(|| invalid("ari_s3w needs a rotation pool"))?;
                    check_dim(d + 1, pool.ambient_dim())?;
                    pool.subsample(spec.n_rotations, rng)?.into_iter().cloned().collect()
                };
                let projections = (0..rotations.len())
                    .map(|_| ProjectionSet::sample(d, l, rng))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self { rotations, projections })
            }
        }
    }

    fn groups(&self) -> usize {
        self.projections.len()
    }
}

/// Loss value, particle gradient and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GradOutput {
    /// Monte-Carlo loss (a p-th power) for the fixed draws.
    pub loss: f64,
    /// Euclidean gradient, point-major, `n * (d + 1)` values.
    pub grad: Vec<f64>,
    /// Adjacent projected particles closer than [`TIE_TOL`] over all slices.
    pub ties: usize,
    /// Particle evaluations that fell inside the cap (zero Jacobian).
    pub capped: usize,
    /// Per particle, the smallest gap to a rank neighbour over all slices.
    /// Present when requested through [`GradOptions::track_gaps`].
    pub min_gap: Option<Vec<f64>>,
}

impl GradOutput {
    pub fn particle_grad(&self, i: usize, ambient: usize) -> &[f64] {
        &self.grad[i * ambient..(i + 1) * ambient]
    }

    pub fn max_norm(&self, ambient: usize) -> f64 {
        self.grad
            .chunks_exact(ambient)
            .map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Gap below which two projected particles count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GradOptions {
    pub track_gaps: bool,
    /// Skip the gradient and only evaluate the loss.
    pub loss_only: bool,
}

/// Slices per parallel work unit. Fixed so that the reduction tree does not
/// depend on the number of threads.
const BLOCK: usize = 8;

struct Side {
    k: usize,
    values: Vec<f64>,
}

struct BlockResult {
    costs: Vec<f64>,
    grad: Vec<f64>,
    ties: usize,
    gaps: Option<Vec<f64>>,
}

fn lift(coords: &[f64], m: usize, embed: bool, eps: f64, status: Option<&mut usize>) -> Side {
    if !embed {
        return Side { k: m, values: coords.to_vec() };
    }
    let d = m - 1;
    let mut values = vec![0.0; coords.len() / m * d];
    let mut capped = 0;
    for (x, o) in coords.chunks_exact(m).zip(values.chunks_exact_mut(d)) {
        capped += usize::from(embed_into(x, eps, o));
    }
    if let Some(c) = status {
        *c += capped;
    }
    Side { k: d, values }
}

fn slice_block(
    x: &Side,
    y: &Side,
    dirs: &[f64],
    p: Order,
    scale: f64,
    opts: GradOptions,
    s: &mut SliceScratch,
) -> BlockResult {
    let k = x.k;
    let n = x.values.len() / k;
    let m = y.values.len() / k;
    let mut out = BlockResult {
        costs: Vec::with_capacity(dirs.len() / k),
        grad: if opts.loss_only { Vec::new() } else { vec![0.0; n * k] },
        ties: 0,
        gaps: opts.track_gaps.then(|| vec![f64::INFINITY; n]),
    };
    for theta in dirs.chunks_exact(k) {
        project(&x.values, k, theta, &mut s.u);
        project(&y.values, k, theta, &mut s.v);
        sort_indexed(&s.u, &mut s.perm_u, &mut s.su, &mut s.sort);
        sorted_into(&s.v, &mut s.sv, &mut s.perm_v, &mut s.sort);
        let (su, sv, perm) = (&s.su, &s.sv, &s.perm_u);
        let grad = &mut out.grad;
        let terms = &mut s.terms;
        terms.clear();
        let loss_only = opts.loss_only;
        let mut visit = |i: usize, j: usize, mass: f64| {
            let delta = su[i] - sv[j];
            terms.push(mass * p.cost(delta));
            if !loss_only {
                let idx = perm[i] as usize;
                let coef = mass * p.cost_derivative(delta) * scale;
                for (g, t) in grad[idx * k..(idx + 1) * k].iter_mut().zip(theta) {
                    *g += coef * t;
                }
            }
        };
        if n == m {
            let w = 1.0 / n as f64;
            for i in 0..n {
                visit(i, i, w);
            }
        } else {
            for_each_uniform_segment(n, m, |i, j, mass| visit(i, j, mass));
        }
        out.costs.push(pairwise_sum(terms));
        for (i, w) in su.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if gap <= TIE_TOL {
                out.ties += 1;
            }
            if let Some(g) = out.gaps.as_mut() {
                for idx in [perm[i], perm[i + 1]] {
                    let slot = &mut g[idx as usize];
                    *slot = slot.min(gap);
                }
            }
        }
    }
    out
}

/// Loss and gradient of a sliced loss at arbitrary non-zero particle
/// coordinates.
///
/// The embedded losses are evaluated through the 0-homogeneous extension of
/// `embed`, so points off the sphere are accepted and the gradient is
/// tangent to the sphere at unit points. `coords` is point-major with `d + 1`
/// entries per particle; the particles carry equal masses.
pub fn loss_and_grad(
    coords: &[f64],
    target: &EmpiricalMeasure,
    spec: &LossSpec,
    draws: &Draws,
    opts: GradOptions,
) -> Result<GradOutput> {
    let m = target.ambient_dim();
    if coords.is_empty() || coords.len() % m != 0 {
        return Err(invalid(format!("particle buffer of length {} does not hold points of ℝ^{m}", coords.len())));
    }
    if !target.is_uniform() {
        return Err(Error::UnsupportedFeature("gradients with non-uniform target weights".into()));
    }
    let embed = spec.kind.embeds();
    let k = if embed { m - 1 } else { m };
    let groups = draws.groups();
    if groups == 0 || (!draws.rotations.is_empty() && draws.rotations.len() != groups) {
        return Err(invalid("draws must hold one projection set, or one per rotation"));
    }
    for proj in &draws.projections {
        check_dim(k, proj.dim())?;
    }
    for r in &draws.rotations {
        check_dim(m, r.ambient_dim())?;
    }
    let n = coords.len() / m;
    let eps = spec.eps.value();
    let mut capped = 0usize;
    let mut losses = Vec::with_capacity(groups);
    let mut grads = Vec::with_capacity(groups);
    let mut ties = 0usize;
    let mut gaps: Option<Vec<f64>> = opts.track_gaps.then(|| vec![f64::INFINITY; n]);

    for g in 0..groups {
        let rotation = draws.rotations.get(g);
        let (xs, ys) = match rotation {
            Some(r) => (r.rotate_flat(coords), r.rotate_flat(target.coords())),
            None => (coords.to_vec(), target.coords().to_vec()),
        };
        let x = lift(&xs, m, embed, eps, Some(&mut capped));
        let y = lift(&ys, m, embed, eps, None);
        let dirs = draws.projections[g].flat();
        let l = dirs.len() / k;
        let scale = 1.0 / (l * groups) as f64;
        let blocks: Vec<BlockResult> = dirs
            .par_chunks(BLOCK * k)
            .map_init(SliceScratch::default, |s, chunk| slice_block(&x, &y, chunk, spec.p, scale, opts, s))
            .collect();
        let mut costs = Vec::with_capacity(l);
        let mut buffers = Vec::with_capacity(blocks.len());
        for b in blocks {
            costs.extend_from_slice(&b.costs);
            ties += b.ties;
            if let (Some(acc), Some(bg)) = (gaps.as_mut(), b.gaps.as_ref()) {
                acc.iter_mut().zip(bg).for_each(|(a, v)| *a = a.min(*v));
            }
            buffers.push(b.grad);
        }
        losses.push(pairwise_sum(&costs) / l as f64);
        if opts.loss_only {
            continue;
        }
        let g_embed = pairwise_sum_buffers(buffers);
        let mut ambient = if embed {
            let mut out = vec![0.0; n * m];
            for ((xi, ge), o) in xs.chunks_exact(m).zip(g_embed.chunks_exact(k)).zip(out.chunks_exact_mut(m)) {
                embed_vjp(xi, eps, ge, o);
            }
            out
        } else {
            g_embed
        };
        if let Some(r) = rotation {
            ambient = r.rotate_flat_transpose(&ambient);
        }
        grads.push(ambient);
    }
    let loss = pairwise_sum(&losses) / groups as f64;
    let grad = if opts.loss_only { Vec::new() } else { pairwise_sum_buffers(grads) };
    Ok(GradOutput { loss, grad, ties, capped, min_gap: gaps })
}

/// Monte-Carlo loss at arbitrary non-zero coordinates (see [`loss_and_grad`]).
pub fn loss_value(coords: &[f64], target: &EmpiricalMeasure, spec: &LossSpec, draws: &Draws) -> Result<f64> {
    Ok(loss_and_grad(coords, target, spec, draws, GradOptions { loss_only: true, track_gaps: false })?.loss)
}

fn spec_from(kind: LossKind, cfg: &S3WConfig, l: usize) -> Result<LossSpec> {
    if cfg.d_prime.is_some_and(|dp| dp != l) {
        return Err(Error::UnsupportedFeature("embedding dimension must equal the sphere dimension".into()));
    }
    Ok(LossSpec { kind, p: cfg.p, eps: cfg.eps, n_projections: cfg.n_projections, n_rotations: 1 })
}

/// Gradient of `S3W_p^p(μ, ν)` with respect to the particles of `μ` for a
/// fixed projection set.
pub fn s3w_grad(mu: &ParticleCloud, nu: &EmpiricalMeasure, cfg: &S3WConfig, proj: &ProjectionSet) -> Result<GradOutput> {
    check_dim(nu.dim(), mu.dim())?;
    let spec = spec_from(LossKind::S3w, cfg, mu.dim())?;
    let draws = Draws { rotations: vec![], projections: vec![proj.clone()] };
    loss_and_grad(mu.coords(), nu, &spec, &draws, GradOptions::default())
}

/// Gradient of the rotation-averaged loss `(1/R) Σ_r S3W_p^p(R_r# μ, R_r# ν)`
/// with one projection set per rotation.
pub fn ri_s3w_grad(
    mu: &ParticleCloud,
    nu: &EmpiricalMeasure,
    cfg: &S3WConfig,
    rotations: &[&Rotation],
    projections: &[ProjectionSet],
) -> Result<GradOutput> {
    check_dim(nu.dim(), mu.dim())?;
    if rotations.is_empty() || rotations.len() != projections.len() {
        return Err(invalid("need one projection set per rotation"));
    }
    let spec = spec_from(LossKind::RiS3w, cfg, mu.dim())?.with_rotations(rotations.len());
    let draws = Draws {
        rotations: rotations.iter().map(|r| (*r).clone()).collect(),
        projections: projections.to_vec(),
    };
    loss_and_grad(mu.coords(), nu, &spec, &draws, GradOptions::default())
}

/// Gradient of ambient sliced Wasserstein `SW_p^p` for fixed directions in
/// ℝ^{d+1} (equatorial directions give the vertical variant).
pub fn sw_grad(mu: &ParticleCloud, nu: &EmpiricalMeasure, p: f64, proj: &ProjectionSet) -> Result<GradOutput> {
    check_dim(nu.dim(), mu.dim())?;
    let spec = LossSpec::new(LossKind::Sw, p, proj.len())?;
    let draws = Draws { rotations: vec![], projections: vec![proj.clone()] };
    loss_and_grad(mu.coords(), nu, &spec, &draws, GradOptions::default())
}
