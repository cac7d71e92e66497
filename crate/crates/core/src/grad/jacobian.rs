use serde::{Deserialize, Serialize};

use crate::sphere::{norm, CapEps, SpherePoint};

/// Where the Jacobian of `embed` was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JacobianStatus {
    Regular,
    /// Inside the ε-cap; the Jacobian is set to zero.
    InsideCap,
    /// At the south pole, where the chart is centred; the limit `I / |z|` on
    /// the first `d` columns is returned.
    AtCentre,
}

/// Jacobian of `embed` as a `d × (d+1)` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedJacobian {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub status: JacobianStatus,
}

impl EmbedJacobian {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// `J v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Jacobian of the 0-homogeneous extension of `embed` to `ℝ^{d+1} \ {0}`.
///
/// Writing `s = (w, z)`, `r = |w|`, `ρ² = r² + z²` and `a = atan2(r, -z)`,
/// `embed = a ŵ` and
///
/// ```text
/// ∂/∂w = (-z/ρ²) ŵŵᵀ + (a/r)(I - ŵŵᵀ),    ∂/∂z = (r/ρ²) ŵ.
/// ```
///
/// Because the extension is constant along rays, `J s = 0`.
pub fn embed_jacobian(s: &SpherePoint, eps: CapEps) -> EmbedJacobian {
    let x = s.coords();
    let d = x.len() - 1;
    let mut data = vec![0.0; d * (d + 1)];
    let mut e = vec![0.0; d];
    let mut col = vec![0.0; d + 1];
    let mut status = JacobianStatus::Regular;
    // Build row by row through the vector-Jacobian product with unit vectors.
    for i in 0..d {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[i] = 1.0;
        status = embed_vjp(x, eps.value(), &e, &mut col);
        data[i * (d + 1)..(i + 1) * (d + 1)].copy_from_slice(&col);
    }
    EmbedJacobian { rows: d, cols: d + 1, data, status }
}

/// `out = J(x)ᵀ g` for the embedding Jacobian at `x` (any non-zero vector).
#[inline]
pub(crate) fn embed_vjp(x: &[f64], eps: f64, g: &[f64], out: &mut [f64]) -> JacobianStatus {
    let d = g.len();
    let (w, z) = (&x[..d], x[d]);
    let rho2 = w.iter().map(|c| c * c).sum::<f64>() + z * z;
    let rho = rho2.sqrt();
    if z / rho > 1.0 - eps {
        out.iter_mut().for_each(|o| *o = 0.0);
        return JacobianStatus::InsideCap;
    }
    let r = norm(w);
    if r == 0.0 {
        let inv = 1.0 / z.abs();
        for (o, gi) in out.iter_mut().zip(g) {
            *o = gi * inv;
        }
        out[d] = 0.0;
        return JacobianStatus::AtCentre;
    }
    let a = r.atan2(-z);
    let wg = w.iter().zip(g).map(|(wi, gi)| wi * gi).sum::<f64>() / r;
    let tangential = a / r;
    let radial = -z / rho2;
    let coef = (radial - tangential) * wg / r;
    for ((o, wi), gi) in out.iter_mut().zip(w).zip(g) {
        *o = coef * wi + tangential * gi;
    }
    out[d] = r / rho2 * wg;
    JacobianStatus::Regular
}
