//! Tangent vectors, the exponential map and the normalization retraction.

use super::{dot, norm, SpherePoint};
use crate::error::{check_dim, invalid, Error, Result};

/// Tolerance for `⟨base, direction⟩ = 0`.
pub const TANGENT_TOL: f64 = 1e-10;

/// A vector of the tangent space at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: SpherePoint,
    direction: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: SpherePoint, direction: Vec<f64>) -> Result<Self> {
        check_dim(base.coords().len(), direction.len())?;
        let ip = dot(base.coords(), &direction);
        if ip.abs() > TANGENT_TOL {
            return Err(invalid(format!("direction is not tangent: ⟨base, v⟩ = {ip:e}")));
        }
        Ok(Self { base, direction })
    }

    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }
}

/// `g - ⟨g, s⟩ s`, the Riemannian gradient of a function with Euclidean
/// gradient `g` at `s`.
pub fn project_tangent(s: &SpherePoint, g: &[f64]) -> Result<TangentVector> {
    check_dim(s.coords().len(), g.len())?;
    let mut v = g.to_vec();
    project_tangent_in_place(s.coords(), &mut v);
    Ok(TangentVector { base: s.clone(), direction: v })
}

pub(crate) fn project_tangent_in_place(x: &[f64], g: &mut [f64]) {
    let ip = dot(x, g);
    for (gi, xi) in g.iter_mut().zip(x) {
        *gi -= ip * xi;
    }
}

/// `exp_x(v) = x cos|v| + (v / |v|) sin|v|`.
pub fn exp_map(t: &TangentVector) -> SpherePoint {
    let mut out = t.base.coords().to_vec();
    exp_map_in_place(&mut out, &t.direction);
    SpherePoint::from_unit_unchecked(out)
}

pub(crate) fn exp_map_in_place(x: &mut [f64], v: &[f64]) {
    let nv = norm(v);
    if nv == 0.0 {
        return;
    }
    let (s, c) = nv.sin_cos();
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi = *xi * c + vi / nv * s;
    }
    let n = norm(x);
    x.iter_mut().for_each(|xi| *xi /= n);
}

/// `(s + step) / |s + step|`.
pub fn retract_normalize(s: &SpherePoint, step: &[f64]) -> Result<SpherePoint> {
    check_dim(s.coords().len(), step.len())?;
    let mut out: Vec<f64> = s.coords().iter().zip(step).map(|(a, b)| a + b).collect();
    if !normalize_in_place(&mut out) {
        return Err(Error::DegenerateStep);
    }
    Ok(SpherePoint::from_unit_unchecked(out))
}

/// Returns `false` (leaving `x` untouched) when `x` is zero or not finite.
pub(crate) fn normalize_in_place(x: &mut [f64]) -> bool {
    let n = norm(x);
    if !(n > 0.0 && n.is_finite()) {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= n);
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn e1() -> SpherePoint {
        SpherePoint::new(vec![1.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn exp_map_examples() {
        let t = TangentVector::new(e1(), vec![0.0; 3]).unwrap();
        assert_eq!(exp_map(&t), e1());
        let t = TangentVector::new(e1(), vec![0.0, FRAC_PI_2, 0.0]).unwrap();
        let q = exp_map(&t);
        assert_abs_diff_eq!(q.coords()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.coords()[1], 1.0, epsilon = 1e-15);
        assert!(TangentVector::new(e1(), vec![1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn projection_is_tangent() {
        let s = SpherePoint::new(vec![0.2, -0.4, 0.7]).unwrap();
        let t = project_tangent(&s, &[1.0, 2.0, -3.0]).unwrap();
        assert!(dot(t.direction(), s.coords()).abs() < 1e-12);
    }

    #[test]
    fn normalize_retraction() {
        let q = retract_normalize(&e1(), &[0.0, 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(q.coords()[0], 0.5f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(retract_normalize(&e1(), &[-1.0, 0.0, 0.0]), Err(Error::DegenerateStep)));
    }
}
