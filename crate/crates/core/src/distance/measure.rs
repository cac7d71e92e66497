use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::ot1d::validate_weights;
use crate::sphere::{Rotation, SpherePoint, UNIT_TOL};

/// A weighted point cloud on 𝕊^d.
///
/// Coordinates are stored point-major in one flat buffer of `n * (d + 1)`
/// values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    uniform: bool,
}

impl EmpiricalMeasure {
    /// Equal mass `1/n` on each point.
    pub fn uniform(points: &[SpherePoint]) -> Result<Self> {
        let n = points.len();
        Self::weighted(points, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn weighted(points: &[SpherePoint], weights: Vec<f64>) -> Result<Self> {
        let first = points.first().ok_or_else(|| invalid("empty measure"))?;
        let d = first.dim();
        let mut coords = Vec::with_capacity(points.len() * (d + 1));
        for p in points {
            check_dim(d, p.dim())?;
            coords.extend_from_slice(p.coords());
        }
        Self::from_flat(d, coords, Some(weights))
    }

    /// Builds a measure from point-major coordinates. Every row must be unit
    /// norm within `1e-12`. `None` weights means uniform.
    pub fn from_flat(d: usize, coords: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        if d < 1 {
            return Err(invalid("sphere dimension must be >= 1"));
        }
        let m = d + 1;
        if coords.is_empty() || coords.len() % m != 0 {
            return Err(invalid(format!(
                "coordinate buffer of length {} is not a non-empty multiple of {m}",
                coords.len()
            )));
        }
        let n = coords.len() / m;
        for (i, row) in coords.chunks_exact(m).enumerate() {
            let norm = row.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
                return Err(invalid(format!("point {i} has norm {norm}, expected 1")));
            }
        }
        let (weights, uniform) = match weights {
            None => (vec![1.0 / n as f64; n], true),
            Some(w) => {
                if w.len() != n {
                    return Err(invalid(format!("{n} points but {} weights", w.len())));
                }
                validate_weights(&w)?;
                let uniform = w.iter().all(|x| *x == w[0]);
                (w, uniform)
            }
        };
        Ok(Self { dim: d, coords, weights, uniform })
    }

    /// Sphere dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim + 1
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// All weights equal.
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn point(&self, i: usize) -> SpherePoint {
        let m = self.ambient_dim();
        SpherePoint::from_unit_unchecked(self.coords[i * m..(i + 1) * m].to_vec())
    }

    pub fn points(&self) -> Vec<SpherePoint> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Pushforward `R_# μ`.
    pub fn rotated(&self, r: &Rotation) -> Result<Self> {
        check_dim(self.ambient_dim(), r.ambient_dim())?;
        let mut coords = r.rotate_flat(&self.coords);
        renormalize_rows(&mut coords, self.ambient_dim());
        Ok(Self { coords, ..self.clone() })
    }
}

pub(crate) fn renormalize_rows(coords: &mut [f64], m: usize) {
    for row in coords.chunks_exact_mut(m) {
        let n = row.iter().map(|c| c * c).sum::<f64>().sqrt();
        row.iter_mut().for_each(|c| *c /= n);
    }
}
