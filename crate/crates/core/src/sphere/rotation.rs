//! Haar-distributed rotations of ℝ^{d+1} and the pregenerated rotation pool.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use super::SpherePoint;
use crate::error::{check_dim, invalid, Result};

/// Tolerance for `RᵀR = I` and `det R = 1`.
pub const ROTATION_TOL: f64 = 1e-10;

/// An element of SO(d+1).
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    matrix: DMatrix<f64>,
}

impl Rotation {
    pub fn identity(ambient: usize) -> Self {
        Self { matrix: DMatrix::identity(ambient, ambient) }
    }

    /// Wraps a matrix after checking orthogonality and unit determinant.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() < 2 {
            return Err(invalid("rotation matrix must be square with size >= 2"));
        }
        let r = Self { matrix };
        let orth = r.orthogonality_error();
        let det = r.determinant();
        if orth > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(invalid(format!(
                "not a rotation: max |RᵀR - I| = {orth:e}, det = {det}"
            )));
        }
        Ok(r)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Ambient dimension `d + 1`.
    pub fn ambient_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest entry of `|RᵀR - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.matrix.nrows();
        let g = self.matrix.transpose() * &self.matrix - DMatrix::<f64>::identity(n, n);
        g.amax()
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.clone().determinant()
    }

    pub fn apply(&self, s: &SpherePoint) -> Result<SpherePoint> {
        check_dim(self.ambient_dim(), s.coords().len())?;
        let mut out = vec![0.0; s.coords().len()];
        self.apply_into(s.coords(), &mut out);
        SpherePoint::new(out)
    }

    /// `out = R x`.
    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.matrix.nrows();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate() {
                acc += self.matrix[(i, j)] * xj;
            }
            *o = acc;
        }
    }

    /// Rotates a point-major coordinate buffer (`n` rows of `d + 1`).
    pub(crate) fn rotate_flat(&self, coords: &[f64]) -> Vec<f64> {
        let m = self.ambient_dim();
        let n = coords.len() / m;
        let x = DMatrix::from_column_slice(m, n, coords);
        let y = &self.matrix * x;
        y.as_slice().to_vec()
    }

    /// Applies `Rᵀ` to a point-major buffer of ambient gradients.
    pub(crate) fn rotate_flat_transpose(&self, coords: &[f64]) -> Vec<f64> {
        let m = self.ambient_dim();
        let n = coords.len() / m;
        let x = DMatrix::from_column_slice(m, n, coords);
        let y = self.matrix.tr_mul(&x);
        y.as_slice().to_vec()
    }
}

/// Draws a rotation of ℝ^{d+1} from the Haar measure on SO(d+1).
///
/// QR of a standard Gaussian matrix, columns of `Q` sign-corrected so that
/// `R` has a positive diagonal (Haar on O(d+1)), then the first column is
/// negated when `det Q = -1`.
pub fn sample_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Rotation> {
    if d < 1 {
        return Err(invalid("sphere dimension must be >= 1"));
    }
    let m = d + 1;
    let g = DMatrix::<f64>::from_fn(m, m, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.clone().determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    Ok(Rotation { matrix: q })
}

/// Immutable bank of pregenerated rotations, subsampled without replacement
/// on each use.
#[derive(Debug, Clone)]
pub struct RotationPool {
    rotations: Vec<Rotation>,
}

impl RotationPool {
    pub fn from_rotations(rotations: Vec<Rotation>) -> Result<Self> {
        if rotations.is_empty() {
            return Err(invalid("rotation pool must not be empty"));
        }
        let m = rotations[0].ambient_dim();
        for r in &rotations {
            check_dim(m, r.ambient_dim())?;
        }
        Ok(Self { rotations })
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.rotations[0].ambient_dim()
    }

    pub fn rotations(&self) -> &[Rotation] {
        &self.rotations
    }

    /// `n_r` distinct pool members chosen uniformly at random.
    pub fn subsample<R: Rng + ?Sized>(&self, n_r: usize, rng: &mut R) -> Result<Vec<&Rotation>> {
        Ok(self.subsample_indices(n_r, rng)?.into_iter().map(|i| &self.rotations[i]).collect())
    }

    pub fn subsample_indices<R: Rng + ?Sized>(&self, n_r: usize, rng: &mut R) -> Result<Vec<usize>> {
        if n_r == 0 || n_r > self.rotations.len() {
            return Err(invalid(format!(
                "cannot subsample {n_r} rotations from a pool of {}",
                self.rotations.len()
            )));
        }
        Ok(index::sample(rng, self.rotations.len(), n_r).into_vec())
    }
}

/// Pregenerates `n_total` Haar rotations of ℝ^{d+1}.
pub fn build_pool<R: Rng + ?Sized>(d: usize, n_total: usize, rng: &mut R) -> Result<RotationPool> {
    if n_total == 0 {
        return Err(invalid("pool size must be >= 1"));
    }
    let rotations = (0..n_total).map(|_| sample_rotation(d, rng)).collect::<Result<Vec<_>>>()?;
    RotationPool::from_rotations(rotations)
}
