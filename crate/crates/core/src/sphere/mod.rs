//! Geometry of the unit hypersphere 𝕊^d ⊂ ℝ^{d+1}.
//!
//! Points are stored as unit vectors. The last coordinate is the "height";
//! the north pole is `[0, …, 0, 1]` and the south pole `[0, …, 0, -1]`.
//!
//! The map at the heart of the crate is [`embed`]: stereographic projection
//! onto the equator plane followed by the radial correction [`h1`], which
//! together send a point to `angle(s, south pole) * s[..d] / |s[..d]|`, the
//! azimuthal equidistant chart centred at the south pole.

mod manifold;
mod rotation;
mod sampling;

pub use manifold::{exp_map, project_tangent, retract_normalize, TangentVector};
pub(crate) use manifold::{exp_map_in_place, normalize_in_place, project_tangent_in_place};
pub use rotation::{build_pool, sample_rotation, Rotation, RotationPool};
pub use sampling::{
    icosahedron_vertices, sample_uniform, sample_vmf, vmf_log_density, VmfMixture, VonMisesFisher,
};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};

/// Tolerance used when checking that an input vector already has unit norm.
pub const UNIT_TOL: f64 = 1e-12;

/// A point of 𝕊^d, stored as a unit vector of length `d + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    /// Normalizes `coords` onto the sphere.
    ///
    /// Fails if fewer than two coordinates are given, if any coordinate is not
    /// finite, or if the vector is zero.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(invalid("a sphere point needs at least two coordinates (d >= 1)"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite coordinate"));
        }
        let norm = norm(&coords);
        if norm == 0.0 {
            return Err(invalid("cannot normalize the zero vector"));
        }
        let mut coords = coords;
        if (norm - 1.0).abs() > f64::EPSILON {
            coords.iter_mut().for_each(|c| *c /= norm);
        }
        Ok(Self { coords })
    }

    /// Builds a point from a vector that must already be unit norm within
    /// [`UNIT_TOL`]; no rescaling happens.
    pub fn from_unit(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(invalid("a sphere point needs at least two coordinates (d >= 1)"));
        }
        let n = norm(&coords);
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(invalid(format!("vector norm {n} is not 1")));
        }
        Ok(Self { coords })
    }

    pub(crate) fn from_unit_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!((norm(&coords) - 1.0).abs() < 1e-9);
        Self { coords }
    }

    /// `[0, …, 0, 1]` on 𝕊^d.
    pub fn north_pole(d: usize) -> Self {
        let mut c = vec![0.0; d + 1];
        c[d] = 1.0;
        Self { coords: c }
    }

    /// `[0, …, 0, -1]` on 𝕊^d.
    pub fn south_pole(d: usize) -> Self {
        let mut c = vec![0.0; d + 1];
        c[d] = -1.0;
        Self { coords: c }
    }

    /// Intrinsic dimension `d` (the ambient dimension is `d + 1`).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Last coordinate.
    pub fn height(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl TryFrom<Vec<f64>> for SpherePoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SpherePoint> for Vec<f64> {
    fn from(p: SpherePoint) -> Self {
        p.coords
    }
}

/// Half-width of the excluded cap around the north pole, `eps ∈ (0, 1)`.
///
/// Points with last coordinate above `1 - eps` are pushed down onto the
/// circle at height `1 - eps` before projecting.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CapEps(f64);

impl CapEps {
    pub const DEFAULT: CapEps = CapEps(1e-6);

    pub fn new(eps: f64) -> Result<Self> {
        if eps > 0.0 && eps < 1.0 {
            Ok(Self(eps))
        } else {
            Err(invalid(format!("cap eps must lie in (0, 1), got {eps}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for CapEps {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl TryFrom<f64> for CapEps {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CapEps> for f64 {
    fn from(e: CapEps) -> Self {
        e.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Great-circle distance `arccos⟨a, b⟩ ∈ [0, π]`.
///
/// Evaluated as `2·atan2(|a - b|, |a + b|)`, which equals the clamped arccos
/// for unit vectors but keeps full precision for nearly equal or nearly
/// antipodal points.
pub fn geodesic_distance(a: &SpherePoint, b: &SpherePoint) -> Result<f64> {
    check_dim(a.coords.len(), b.coords.len())?;
    Ok(geodesic_raw(&a.coords, &b.coords))
}

pub(crate) fn geodesic_raw(a: &[f64], b: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        diff += (x - y) * (x - y);
        sum += (x + y) * (x + y);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// Stereographic projection from the north pole onto the equator plane,
/// `s[..d] / (1 - s_{d+1})`.
pub fn stereo_project(s: &SpherePoint) -> Result<Vec<f64>> {
    let z = s.height();
    if z >= 1.0 {
        return Err(Error::Domain(
            "stereographic projection is undefined at the north pole".into(),
        ));
    }
    let d = s.dim();
    Ok(s.coords[..d].iter().map(|c| c / (1.0 - z)).collect())
}

/// Inverse of [`stereo_project`].
pub fn stereo_inverse(x: &[f64]) -> SpherePoint {
    let r2 = dot(x, x);
    let scale = 2.0 / (r2 + 1.0);
    let mut coords: Vec<f64> = x.iter().map(|c| c * scale).collect();
    coords.push((r2 - 1.0) / (r2 + 1.0));
    SpherePoint::new(coords).expect("inverse stereographic image is a finite non-zero vector")
}

/// Pushes points inside the cap around the north pole down onto the circle at
/// height `1 - eps`, keeping their azimuth. Exactly at the pole the azimuth
/// is undefined and `e₁` is used.
pub fn epsilon_cap(s: &SpherePoint, eps: CapEps) -> SpherePoint {
    let d = s.dim();
    let top = 1.0 - eps.0;
    if s.height() <= top {
        return s.clone();
    }
    let radius = (1.0 - top * top).sqrt();
    let w = &s.coords[..d];
    let wn = norm(w);
    let mut coords = vec![0.0; d + 1];
    if wn > 0.0 {
        for (c, x) in coords.iter_mut().zip(w) {
            *c = x / wn * radius;
        }
    } else {
        coords[0] = radius;
    }
    coords[d] = top;
    SpherePoint::from_unit_unchecked(coords)
}

/// Radial correction of the stereographic image:
/// `h1(x) = arccos(-s_{d+1}) x / |x|` with `s_{d+1} = (|x|² - 1) / (|x|² + 1)`,
/// and `h1(0) = 0`.
///
/// The angle is computed as `2·atan(|x|)`, the same quantity without the
/// cancellation that `arccos` suffers near `|x| = 0`.
pub fn h1(x: &[f64]) -> Vec<f64> {
    let r = norm(x);
    if r == 0.0 {
        return vec![0.0; x.len()];
    }
    let scale = 2.0 * r.atan() / r;
    x.iter().map(|c| c * scale).collect()
}

/// `h1(stereo_project(epsilon_cap(s)))`: the azimuthal equidistant chart
/// centred at the south pole. Every image has norm at most π.
pub fn embed(s: &SpherePoint, eps: CapEps) -> Vec<f64> {
    let mut out = vec![0.0; s.dim()];
    embed_into(&s.coords, eps.0, &mut out);
    out
}

/// Raw form of [`embed`] for hot loops.
///
/// Accepts any non-zero vector of `ℝ^{d+1}` and depends only on its
/// direction; writes `d` values into `out` and reports whether the cap was
/// active.
#[inline]
pub(crate) fn embed_into(x: &[f64], eps: f64, out: &mut [f64]) -> bool {
    let d = out.len();
    let rho = norm(x);
    let z = x[d] / rho;
    let w = &x[..d];
    let top = 1.0 - eps;
    if z > top {
        // Capped: radius and angle are fixed by the cap circle.
        let wn = norm(w);
        let angle = (1.0 - top * top).sqrt().atan2(-top);
        if wn > 0.0 {
            for (o, c) in out.iter_mut().zip(w) {
                *o = angle * c / wn;
            }
        } else {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[0] = angle;
        }
        return true;
    }
    let wn = norm(w);
    if wn == 0.0 {
        out.iter_mut().for_each(|o| *o = 0.0);
        return false;
    }
    let angle = wn.atan2(-x[d]);
    for (o, c) in out.iter_mut().zip(w) {
        *o = angle * c / wn;
    }
    false
}

/// Length of the embedding difference folded back onto `[0, π]`:
/// `min(Δ, 2π - Δ)` with `Δ = |embed(a) - embed(b)|`.
pub fn folded_embed_distance(a: &SpherePoint, b: &SpherePoint, eps: CapEps) -> Result<f64> {
    check_dim(a.coords.len(), b.coords.len())?;
    let ea = embed(a, eps);
    let eb = embed(b, eps);
    let delta = ea
        .iter()
        .zip(&eb)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    Ok(delta.min(2.0 * PI - delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(c: &[f64]) -> SpherePoint {
        SpherePoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn construction_normalizes_and_validates() {
        let s = p(&[3.0, 4.0]);
        assert_abs_diff_eq!(norm(s.coords()), 1.0, epsilon = 1e-12);
        assert!(SpherePoint::new(vec![1.0]).is_err());
        assert!(SpherePoint::new(vec![0.0, 0.0, 0.0]).is_err());
        assert!(SpherePoint::new(vec![f64::NAN, 1.0]).is_err());
        assert!(SpherePoint::from_unit(vec![1.0, 1.0]).is_err());
        assert_eq!(SpherePoint::north_pole(2).coords(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn geodesic_examples() {
        let d = geodesic_distance(&p(&[1.0, 0.0, 0.0]), &p(&[0.0, 1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(d, PI / 2.0, epsilon = 1e-15);
        let a = p(&[0.3, -0.2, 0.9]);
        assert_eq!(geodesic_distance(&a, &a).unwrap(), 0.0);
        let d = geodesic_distance(&SpherePoint::north_pole(2), &SpherePoint::south_pole(2)).unwrap();
        assert_abs_diff_eq!(d, PI, epsilon = 1e-15);
        assert!(matches!(
            geodesic_distance(&p(&[1.0, 0.0]), &p(&[1.0, 0.0, 0.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn geodesic_matches_clamped_arccos() {
        let a = p(&[0.1, 0.7, -0.2]);
        let b = p(&[-0.5, 0.1, 0.4]);
        let acos = dot(a.coords(), b.coords()).clamp(-1.0, 1.0).acos();
        assert_abs_diff_eq!(geodesic_distance(&a, &b).unwrap(), acos, epsilon = 1e-14);
    }

    #[test]
    fn stereo_examples() {
        assert_eq!(stereo_project(&SpherePoint::south_pole(2)).unwrap(), vec![0.0, 0.0]);
        assert_eq!(stereo_project(&p(&[1.0, 0.0, 0.0])).unwrap(), vec![1.0, 0.0]);
        let x = stereo_project(&p(&[0.0, 0.6, 0.8])).unwrap();
        assert_abs_diff_eq!(x[0], 0.0);
        assert_abs_diff_eq!(x[1], 3.0, epsilon = 1e-12);
        assert!(matches!(
            stereo_project(&SpherePoint::north_pole(2)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn stereo_inverse_examples() {
        assert_eq!(stereo_inverse(&[0.0, 0.0]).coords(), &[0.0, 0.0, -1.0]);
        let e = stereo_inverse(&[1.0, 0.0]);
        assert_abs_diff_eq!(e.coords()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.coords()[2], 0.0, epsilon = 1e-15);
        let s = stereo_inverse(&[0.0, 3.0]);
        assert_abs_diff_eq!(s.coords()[1], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s.coords()[2], 0.8, epsilon = 1e-12);
    }

    #[test]
    fn cap_examples() {
        let eps = CapEps::new(1e-3).unwrap();
        let s = p(&[0.6, 0.8, 0.0]);
        assert_eq!(epsilon_cap(&s, eps), s);

        let capped = epsilon_cap(&SpherePoint::north_pole(2), CapEps::new(0.5).unwrap());
        assert_abs_diff_eq!(capped.coords()[0], 0.75f64.sqrt(), epsilon = 1e-15);
        assert_eq!(capped.coords()[1], 0.0);
        assert_eq!(capped.coords()[2], 0.5);

        let eps = CapEps::new(0.01).unwrap();
        let c = 0.9999f64;
        let s = p(&[0.0, (1.0 - c * c).sqrt(), c]);
        let capped = epsilon_cap(&s, eps);
        assert_eq!(capped.height(), 1.0 - 0.01);
        assert_abs_diff_eq!(norm(capped.coords()), 1.0, epsilon = 1e-15);
        assert_eq!(capped.coords()[0], 0.0);

        assert!(CapEps::new(0.0).is_err());
        assert!(CapEps::new(1.0).is_err());
    }

    #[test]
    fn h1_examples() {
        assert_eq!(h1(&[0.0, 0.0]), vec![0.0, 0.0]);
        let v = h1(&[1.0, 0.0]);
        assert_abs_diff_eq!(v[0], PI / 2.0, epsilon = 1e-15);
        let v = h1(&[0.0, 3.0]);
        assert_abs_diff_eq!(v[1], (-0.8f64).acos(), epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], 2.49809, epsilon = 1e-5);
    }

    #[test]
    fn h1_matches_literal_arccos_form() {
        for x in [[0.3, -0.4], [2.0, 1.0], [-7.0, 0.5], [0.01, 0.02]] {
            let r2: f64 = x[0] * x[0] + x[1] * x[1];
            let s = (r2 - 1.0) / (r2 + 1.0);
            let a = (-s).acos();
            let r = r2.sqrt();
            let h = h1(&x);
            assert_abs_diff_eq!(h[0], a * x[0] / r, epsilon = 1e-12);
            assert_abs_diff_eq!(h[1], a * x[1] / r, epsilon = 1e-12);
        }
    }

    #[test]
    fn embed_examples() {
        let eps = CapEps::DEFAULT;
        assert_eq!(embed(&SpherePoint::south_pole(2), eps), vec![0.0, 0.0]);
        for alpha in [-1.2, -0.3, 0.0, 0.7, 1.5] {
            let s = p(&[f64::cos(alpha), 0.0, f64::sin(alpha)]);
            let e = embed(&s, eps);
            assert_abs_diff_eq!(e[0], alpha + PI / 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(e[1], 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn embed_equals_composition() {
        let eps = CapEps::new(1e-3).unwrap();
        for c in [[0.2, -0.5, 0.3], [0.9, 0.1, -0.4], [-0.1, 0.05, 0.999], [0.0, 0.0, 1.0]] {
            let s = p(&c);
            let composed = h1(&stereo_project(&epsilon_cap(&s, eps)).unwrap());
            let direct = embed(&s, eps);
            for (a, b) in composed.iter().zip(&direct) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn serde_round_trip_normalizes() {
        let s: SpherePoint = serde_json::from_str("[0.0, 2.0]").unwrap();
        assert_eq!(s.coords(), &[0.0, 1.0]);
        assert!(serde_json::from_str::<CapEps>("1.5").is_err());
    }
}
