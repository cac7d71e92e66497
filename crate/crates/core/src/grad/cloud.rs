use rand::Rng;

use crate::distance::EmpiricalMeasure;
use crate::error::{invalid, Result};
use crate::sphere::{sample_uniform, SpherePoint, UNIT_TOL};

/// Equal-weight particles on 𝕊^d, stored point-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl ParticleCloud {
    pub fn new(points: &[SpherePoint]) -> Result<Self> {
        let measure = EmpiricalMeasure::uniform(points)?;
        Ok(Self { dim: measure.dim(), coords: measure.coords().to_vec() })
    }

    /// Rows must be unit norm within `1e-12`.
    pub fn from_flat(d: usize, coords: Vec<f64>) -> Result<Self> {
        let measure = EmpiricalMeasure::from_flat(d, coords, None)?;
        Ok(Self::from_measure_coords(&measure))
    }

    fn from_measure_coords(m: &EmpiricalMeasure) -> Self {
        Self { dim: m.dim(), coords: m.coords().to_vec() }
    }

    /// Drops the weights of `m`.
    pub fn from_measure(m: &EmpiricalMeasure) -> Self {
        Self::from_measure_coords(m)
    }

    /// `n` particles drawn uniformly on 𝕊^d.
    pub fn sample_uniform<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(invalid("a particle cloud needs at least one particle"));
        }
        Self::new(&sample_uniform(d, n, rng)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim + 1
    }

    pub fn len(&self) -> usize {
        self.coords.len() / (self.dim + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        let m = self.ambient_dim();
        &self.coords[i * m..(i + 1) * m]
    }

    pub fn points(&self) -> Vec<SpherePoint> {
        self.coords
            .chunks_exact(self.ambient_dim())
            .map(|c| SpherePoint::from_unit_unchecked(c.to_vec()))
            .collect()
    }

    /// Uniform empirical measure on the particles.
    pub fn to_measure(&self) -> EmpiricalMeasure {
        EmpiricalMeasure::from_flat(self.dim, self.coords.clone(), None)
            .expect("particles stay on the sphere")
    }

    /// The particles at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.ambient_dim());
        for &i in indices {
            coords.extend_from_slice(self.particle(i));
        }
        Self { dim: self.dim, coords }
    }

    /// Largest `| ‖x_i‖ - 1 |`.
    pub fn max_norm_deviation(&self) -> f64 {
        self.coords
            .chunks_exact(self.ambient_dim())
            .map(|c| (c.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn debug_check(&self) {
        debug_assert!(self.max_norm_deviation() <= UNIT_TOL);
    }
}
