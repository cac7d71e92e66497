use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `L` slicing directions, unit vectors of ℝ^{d'}, stored flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSet {
    dim: usize,
    dirs: Vec<f64>,
}

impl ProjectionSet {
    /// `count` directions uniform on 𝕊^{dim-1}.
    pub fn sample<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Result<Self> {
        if dim < 1 || count < 1 {
            return Err(invalid("projection sets need dim >= 1 and at least one direction"));
        }
        let mut dirs = Vec::with_capacity(dim * count);
        for _ in 0..count {
            push_gaussian_direction(&mut dirs, dim, dim, rng);
        }
        Ok(Self { dim, dirs })
    }

    /// `count` directions uniform on the equator `{θ ∈ 𝕊^{dim-1} : θ_dim = 0}`.
    pub fn sample_equator<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Result<Self> {
        if dim < 2 || count < 1 {
            return Err(invalid("equatorial directions need dim >= 2 and at least one direction"));
        }
        let mut dirs = Vec::with_capacity(dim * count);
        for _ in 0..count {
            push_gaussian_direction(&mut dirs, dim, dim - 1, rng);
        }
        Ok(Self { dim, dirs })
    }

    /// Normalizes and stores the given directions.
    pub fn from_directions(directions: &[Vec<f64>]) -> Result<Self> {
        let dim = directions.first().map(Vec::len).ok_or_else(|| invalid("no directions"))?;
        if dim == 0 {
            return Err(invalid("zero-dimensional direction"));
        }
        let mut dirs = Vec::with_capacity(dim * directions.len());
        for d in directions {
            if d.len() != dim {
                return Err(invalid("directions differ in dimension"));
            }
            let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(n > 0.0 && n.is_finite()) {
                return Err(invalid("direction must be finite and non-zero"));
            }
            dirs.extend(d.iter().map(|x| x / n));
        }
        Ok(Self { dim, dirs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.dirs.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn direction(&self, l: usize) -> &[f64] {
        &self.dirs[l * self.dim..(l + 1) * self.dim]
    }

    pub(crate) fn flat(&self) -> &[f64] {
        &self.dirs
    }

    /// First `count` directions.
    pub fn truncated(&self, count: usize) -> Self {
        let count = count.min(self.len()).max(1);
        Self { dim: self.dim, dirs: self.dirs[..count * self.dim].to_vec() }
    }
}

fn push_gaussian_direction<R: Rng + ?Sized>(out: &mut Vec<f64>, dim: usize, active: usize, rng: &mut R) {
    loop {
        let v: Vec<f64> = (0..active).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            out.extend(v.iter().map(|x| x / n));
            out.extend(std::iter::repeat_n(0.0, dim - active));
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn directions_are_unit() {
        let mut rng = rng_from_seed(31);
        let p = ProjectionSet::sample(4, 50, &mut rng).unwrap();
        assert_eq!(p.len(), 50);
        for l in 0..p.len() {
            let n: f64 = p.direction(l).iter().map(|x| x * x).sum();
            assert!((n.sqrt() - 1.0).abs() < 1e-12);
        }
        let e = ProjectionSet::sample_equator(3, 10, &mut rng).unwrap();
        assert!((0..10).all(|l| e.direction(l)[2] == 0.0));
        assert!(ProjectionSet::sample_equator(1, 10, &mut rng).is_err());
        assert!(ProjectionSet::from_directions(&[vec![0.0, 0.0]]).is_err());
    }
}
