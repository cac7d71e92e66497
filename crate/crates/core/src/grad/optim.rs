use serde::{Deserialize, Serialize};

use super::ParticleCloud;
use crate::error::{check_dim, invalid, Result};
use crate::sphere::{exp_map_in_place, normalize_in_place, project_tangent_in_place};

/// How an ambient step is brought back onto the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retraction {
    /// `(x + step) / |x + step|`.
    #[default]
    Normalize,
    /// Project the step onto the tangent space and follow the geodesic.
    ExpMap,
}

/// Diagnostics of one optimizer step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepReport {
    /// Particles left in place because the retraction was degenerate.
    pub skipped: usize,
}

fn check_grads(cloud: &ParticleCloud, grads: &[f64]) -> Result<()> {
    check_dim(cloud.coords().len(), grads.len())
}

/// Moves each particle by `step` (an ambient displacement) and retracts.
/// All-zero steps leave the particle bit-for-bit unchanged.
pub(crate) fn apply_steps(cloud: &mut ParticleCloud, steps: &[f64], retraction: Retraction) -> StepReport {
    let m = cloud.ambient_dim();
    let mut report = StepReport::default();
    let mut buf = vec![0.0; m];
    for (x, step) in cloud.coords_mut().chunks_exact_mut(m).zip(steps.chunks_exact(m)) {
        if step.iter().all(|v| *v == 0.0) {
            continue;
        }
        match retraction {
            Retraction::Normalize => {
                for ((b, xi), si) in buf.iter_mut().zip(x.iter()).zip(step) {
                    *b = xi + si;
                }
                if normalize_in_place(&mut buf) {
                    x.copy_from_slice(&buf);
                } else {
                    report.skipped += 1;
                }
            }
            Retraction::ExpMap => {
                buf.copy_from_slice(step);
                project_tangent_in_place(x, &mut buf);
                if buf.iter().all(|v| v.is_finite()) {
                    exp_map_in_place(x, &buf);
                } else {
                    report.skipped += 1;
                }
            }
        }
    }
    cloud.debug_check();
    report
}

/// Projected gradient step `x ← retract(x - lr · g)`.
pub fn pgd_step(cloud: &ParticleCloud, grads: &[f64], lr: f64, retraction: Retraction) -> Result<(ParticleCloud, StepReport)> {
    check_grads(cloud, grads)?;
    if !(lr > 0.0) {
        return Err(invalid("learning rate must be > 0"));
    }
    let steps: Vec<f64> = grads.iter().map(|g| -lr * g).collect();
    let mut next = cloud.clone();
    let report = apply_steps(&mut next, &steps, retraction);
    Ok((next, report))
}

/// Adam moments for every particle coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// Zero moments with `β₁ = 0.9`, `β₂ = 0.999`, `ε = 1e-8`.
    pub fn new(len: usize) -> Self {
        Self::with_params(len, 0.9, 0.999, 1e-8)
    }

    pub fn with_params(len: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len], t: 0, beta1, beta2, eps }
    }

    pub fn for_cloud(cloud: &ParticleCloud) -> Self {
        Self::new(cloud.coords().len())
    }

    /// Updates the moments and returns the ambient displacement.
    pub(crate) fn update(&mut self, grads: &[f64], lr: f64) -> Vec<f64> {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut steps = vec![0.0; grads.len()];
        for (((m, v), g), s) in self.m.iter_mut().zip(self.v.iter_mut()).zip(grads).zip(steps.iter_mut()) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *s = -lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        steps
    }
}

/// One Adam step in ambient coordinates followed by the normalization
/// retraction.
pub fn adam_step_projected(
    cloud: &ParticleCloud,
    grads: &[f64],
    state: &AdamState,
    lr: f64,
) -> Result<(ParticleCloud, AdamState)> {
    check_grads(cloud, grads)?;
    if state.m.len() != grads.len() || state.v.len() != grads.len() {
        return Err(invalid("Adam state does not match the cloud"));
    }
    if !(lr > 0.0) {
        return Err(invalid("learning rate must be > 0"));
    }
    let mut state = state.clone();
    let steps = state.update(grads, lr);
    let mut next = cloud.clone();
    apply_steps(&mut next, &steps, Retraction::Normalize);
    Ok((next, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::sphere::SpherePoint;

    fn cloud() -> ParticleCloud {
        ParticleCloud::sample_uniform(2, 50, &mut rng_from_seed(1)).unwrap()
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let c = cloud();
        let zero = vec![0.0; c.coords().len()];
        for r in [Retraction::Normalize, Retraction::ExpMap] {
            assert_eq!(pgd_step(&c, &zero, 0.1, r).unwrap().0, c);
        }
        let (next, state) = adam_step_projected(&c, &zero, &AdamState::for_cloud(&c), 0.1).unwrap();
        assert_eq!(next, c);
        assert_eq!(state.t, 1);
    }

    #[test]
    fn retractions_agree_to_second_order() {
        let x = SpherePoint::new(vec![0.3, -0.4, 0.8]).unwrap();
        let c = ParticleCloud::new(&[x.clone()]).unwrap();
        let mut g = vec![0.5, 1.0, -0.2];
        project_tangent_in_place(x.coords(), &mut g);
        for lr in [1e-1, 1e-2, 1e-3] {
            let a = pgd_step(&c, &g, lr, Retraction::Normalize).unwrap().0;
            let b = pgd_step(&c, &g, lr, Retraction::ExpMap).unwrap().0;
            let diff = a.coords().iter().zip(b.coords()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(diff < 10.0 * lr * lr, "lr={lr} diff={diff}");
        }
    }

    #[test]
    fn norms_are_restored() {
        let c = cloud();
        let mut rng = rng_from_seed(2);
        let g: Vec<f64> = (0..c.coords().len()).map(|_| rand::Rng::random_range(&mut rng, -5.0..5.0)).collect();
        for r in [Retraction::Normalize, Retraction::ExpMap] {
            let (next, _) = pgd_step(&c, &g, 0.3, r).unwrap();
            assert!(next.max_norm_deviation() <= 1e-12);
        }
        let (next, _) = adam_step_projected(&c, &g, &AdamState::for_cloud(&c), 0.3).unwrap();
        assert!(next.max_norm_deviation() <= 1e-12);
    }

    #[test]
    fn degenerate_steps_are_skipped() {
        let x = SpherePoint::new(vec![0.0, 0.0, 1.0]).unwrap();
        let c = ParticleCloud::new(&[x]).unwrap();
        let (next, report) = pgd_step(&c, &[0.0, 0.0, 1.0], 1.0, Retraction::Normalize).unwrap();
        assert_eq!(report.skipped, 1);
        assert_eq!(next, c);
    }

    #[test]
    fn first_adam_step_is_sign_scaled() {
        let c = cloud();
        let g: Vec<f64> = (0..c.coords().len()).map(|i| (i as f64 - 70.0) * 0.01).collect();
        let mut state = AdamState::for_cloud(&c);
        let steps = state.update(&g, 0.01);
        for (s, gi) in steps.iter().zip(&g) {
            // m̂ = g, v̂ = g², so the step is -lr g / (|g| + ε)
            let expected = -0.01 * gi / (gi.abs() + 1e-8);
            assert!((s - expected).abs() < 1e-15);
        }
        assert!(pgd_step(&c, &g[1..], 0.1, Retraction::Normalize).is_err());
    }
}
