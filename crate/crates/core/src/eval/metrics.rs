use rayon::prelude::*;

use super::lap::solve_dense;
use super::special::{bessel_i_ratio, ln_normalized_bessel_i};
use crate::distance::EmpiricalMeasure;
use crate::error::{check_dim, invalid, Error, Result};
use crate::grad::ParticleCloud;
use crate::sphere::{geodesic_raw, SpherePoint, VmfMixture};
use crate::sum::pairwise_sum;

/// Largest cloud size accepted by [`exact_w2_geodesic`].
pub const MAX_ASSIGNMENT_SIZE: usize = 4096;

/// Optimal matching between two equal-size uniform clouds under squared
/// geodesic cost. Returns `row_to_col` and the mean matched cost.
pub fn geodesic_assignment(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<(Vec<usize>, f64)> {
    check_dim(a.dim(), b.dim())?;
    if !a.is_uniform() || !b.is_uniform() {
        return Err(invalid("exact W2 needs uniform weights"));
    }
    if a.len() != b.len() {
        return Err(invalid(format!("exact W2 needs equal sizes, got {} and {}", a.len(), b.len())));
    }
    let n = a.len();
    if n > MAX_ASSIGNMENT_SIZE {
        return Err(Error::Capacity(format!(
            "assignment on {n} points exceeds {MAX_ASSIGNMENT_SIZE}; evaluate on a subsample"
        )));
    }
    let m = a.ambient_dim();
    let (ca, cb) = (a.coords(), b.coords());
    let mut cost = vec![0.0; n * n];
    cost.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let x = &ca[i * m..(i + 1) * m];
        for (j, c) in row.iter_mut().enumerate() {
            let g = geodesic_raw(x, &cb[j * m..(j + 1) * m]);
            *c = g * g;
        }
    });
    let perm = solve_dense(&cost, n);
    let mut matched: Vec<f64> = perm.iter().enumerate().map(|(i, &j)| cost[i * n + j]).collect();
    // Summing in value order makes the result independent of argument order.
    matched.sort_by(f64::total_cmp);
    Ok((perm, pairwise_sum(&matched) / n as f64))
}

/// Exact 2-Wasserstein distance with geodesic ground cost between two
/// equal-size uniform clouds, via a dense assignment solve (`n <= 4096`).
pub fn exact_w2_geodesic(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    Ok(geodesic_assignment(a, b)?.1.sqrt())
}

/// Negative log-likelihood of the particles under a mixture on 𝕊²,
/// summed over particles: `-Σ_i log Σ_j w_j f_j(x_i)`.
pub fn nll(cloud: &ParticleCloud, target: &VmfMixture) -> Result<f64> {
    nll_points(&cloud.points(), target)
}

pub fn nll_points(points: &[SpherePoint], target: &VmfMixture) -> Result<f64> {
    if target.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            found: target.dim(),
            reason: "the closed-form vMF density is implemented for the 2-sphere only",
        });
    }
    let logs = points
        .iter()
        .map(|p| {
            check_dim(2, p.dim())?;
            target.log_density(p)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(-pairwise_sum(&logs))
}

/// `KL(vMF(μ, κ) ‖ Unif(𝕊^d))` in closed form.
///
/// With `ν = (d+1)/2 - 1` and `S_ν(κ) = Γ(ν+1)(2/κ)^ν I_ν(κ)` the
/// divergence reduces to `κ I_{ν+1}(κ)/I_ν(κ) - ln S_ν(κ)`, which avoids the
/// cancellation between the normalizing constants as `κ → 0`.
pub fn kl_vmf_uniform(kappa: f64, d: usize) -> Result<f64> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(invalid(format!("concentration must be finite and >= 0, got {kappa}")));
    }
    if d < 1 {
        return Err(invalid("sphere dimension must be >= 1"));
    }
    if kappa == 0.0 {
        return Ok(0.0);
    }
    let nu = (d + 1) as f64 / 2.0 - 1.0;
    let kl = kappa * bessel_i_ratio(nu, kappa) - ln_normalized_bessel_i(nu, kappa);
    Ok(kl.max(0.0))
}
