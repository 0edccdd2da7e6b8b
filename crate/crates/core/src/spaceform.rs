//! Model spaces of constant curvature δ.
//!
//! Euclidean space (δ = 0) is represented by plain coordinates in ℝᴺ. The
//! round sphere (δ > 0) is the set `⟨x,x⟩ = 1/δ` in ℝᴺ⁺¹ and hyperbolic space
//! (δ < 0) is the upper sheet of `⟨x,x⟩_L = 1/δ` in Minkowski space ℝ¹'ᴺ with
//! signature (−,+,…,+). All geodesic quantities are closed form.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = DVector<f64>;

/// Below this value of `r·√|δ|` the profile functions switch to Taylor series.
const SERIES_THRESHOLD: f64 = 1e-4;
/// Tolerance on the model constraint for incoming points.
pub const POINT_TOLERANCE: f64 = 1e-10;
/// Points drifting further than this from the constraint get re-projected.
const REPROJECT_DRIFT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ModelKind {
    Euclidean,
    Sphere,
    Hyperbolic,
}

impl ModelKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ModelKind::Euclidean => "EUCLIDEAN",
            ModelKind::Sphere => "SPHERE",
            ModelKind::Hyperbolic => "HYPERBOLIC",
        }
    }
}

/// Generalized sine and cosine `(s_δ(r), c_δ(r))`.
pub fn radial_profile(delta: f64, r: f64) -> Result<(f64, f64)> {
    if !(r >= 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("radial profile needs r >= 0, got r = {r}")));
    }
    if delta > 0.0 && r > std::f64::consts::PI / delta.sqrt() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "r = {r} exceeds pi/sqrt(delta) for delta = {delta}"
        )));
    }
    Ok(profile_unchecked(delta, r))
}

pub(crate) fn profile_unchecked(delta: f64, r: f64) -> (f64, f64) {
    let k = delta.abs().sqrt();
    if k * r < SERIES_THRESHOLD {
        let r2 = r * r;
        let d = delta * r2;
        let s = r * (1.0 - d / 6.0 + d * d / 120.0 - d * d * d / 5040.0);
        let c = 1.0 - d / 2.0 + d * d / 24.0 - d * d * d / 720.0;
        return (s, c);
    }
    if delta > 0.0 {
        ((k * r).sin() / k, (k * r).cos())
    } else {
        ((k * r).sinh() / k, (k * r).cosh())
    }
}

/// `s_δ(r) / r`, finite at r = 0.
pub fn sinc_profile(delta: f64, r: f64) -> f64 {
    let k = delta.abs().sqrt();
    if k * r < SERIES_THRESHOLD {
        let d = delta * r * r;
        return 1.0 - d / 6.0 + d * d / 120.0 - d * d * d / 5040.0;
    }
    profile_unchecked(delta, r).0 / r
}

/// `θ / sin θ` (δ > 0) or `θ / sinh θ` (δ < 0), finite at θ = 0.
fn angle_ratio(delta: f64, theta: f64) -> f64 {
    if theta < SERIES_THRESHOLD {
        let t2 = theta * theta;
        if delta > 0.0 {
            1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0
        } else {
            1.0 - t2 / 6.0 + 7.0 * t2 * t2 / 360.0
        }
    } else if delta > 0.0 {
        theta / theta.sin()
    } else {
        theta / theta.sinh()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceForm {
    pub delta: f64,
    pub ambient_dim: usize,
}

impl SpaceForm {
    pub fn new(delta: f64, ambient_dim: usize) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::Domain(format!("curvature must be finite, got {delta}")));
        }
        if ambient_dim < 2 {
            return Err(Error::Domain(format!("ambient dimension must be >= 2, got {ambient_dim}")));
        }
        Ok(Self { delta, ambient_dim })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self { delta: 0.0, ambient_dim: dim }
    }

    pub fn kind(&self) -> ModelKind {
        if self.delta > 0.0 {
            ModelKind::Sphere
        } else if self.delta < 0.0 {
            ModelKind::Hyperbolic
        } else {
            ModelKind::Euclidean
        }
    }

    /// Length of the coordinate vectors used to store points.
    pub fn repr_dim(&self) -> usize {
        match self.kind() {
            ModelKind::Euclidean => self.ambient_dim,
            _ => self.ambient_dim + 1,
        }
    }

    fn sqrt_abs_delta(&self) -> f64 {
        self.delta.abs().sqrt()
    }

    /// The model inner product: Euclidean for δ ≥ 0, Lorentzian for δ < 0.
    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        match self.kind() {
            ModelKind::Hyperbolic => a.dot(b) - 2.0 * a[0] * b[0],
            _ => a.dot(b),
        }
    }

    /// Norm of a tangent vector (spacelike in the hyperbolic model).
    pub fn tangent_norm(&self, v: &DVector<f64>) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// Distance of a point from the model constraint, relative to the model scale.
    pub fn constraint_defect(&self, x: &Point) -> f64 {
        if x.len() != self.repr_dim() {
            return f64::INFINITY;
        }
        match self.kind() {
            ModelKind::Euclidean => 0.0,
            ModelKind::Sphere => (self.delta * self.inner(x, x) - 1.0).abs(),
            ModelKind::Hyperbolic => {
                let d = (self.delta * self.inner(x, x) - 1.0).abs();
                if x[0] > 0.0 {
                    d
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        if x.len() != self.repr_dim() {
            return Err(Error::InvalidPoint(format!(
                "expected {} coordinates, got {}",
                self.repr_dim(),
                x.len()
            )));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        let defect = self.constraint_defect(x);
        if defect > POINT_TOLERANCE {
            return Err(Error::InvalidPoint(format!(
                "model constraint violated by {defect:e} (tolerance {POINT_TOLERANCE:e})"
            )));
        }
        Ok(())
    }

    /// Pull a point back onto the constraint surface.
    pub fn project(&self, x: &Point) -> Point {
        match self.kind() {
            ModelKind::Euclidean => x.clone(),
            ModelKind::Sphere => {
                let n = x.norm();
                x * (1.0 / (self.sqrt_abs_delta() * n))
            }
            ModelKind::Hyperbolic => {
                // Recompute the time coordinate from the spatial part.
                let mut y = x.clone();
                let spatial: f64 = x.iter().skip(1).map(|c| c * c).sum();
                y[0] = (1.0 / self.delta.abs() + spatial).sqrt();
                y
            }
        }
    }

    fn reproject_if_drifted(&self, x: Point) -> Point {
        if self.constraint_defect(&x) > REPROJECT_DRIFT {
            self.project(&x)
        } else {
            x
        }
    }

    /// Angle-like parameter `θ = √|δ|·d` (or the distance itself when δ = 0).
    fn chord_angle(&self, a: &Point, b: &Point) -> f64 {
        let diff = b - a;
        match self.kind() {
            ModelKind::Euclidean => diff.norm(),
            ModelKind::Sphere => {
                let k = self.sqrt_abs_delta();
                let half = (k * diff.norm() / 2.0).min(1.0);
                2.0 * half.asin()
            }
            ModelKind::Hyperbolic => {
                let k = self.sqrt_abs_delta();
                let q = self.inner(&diff, &diff).max(0.0).sqrt();
                2.0 * (k * q / 2.0).asinh()
            }
        }
    }

    pub fn geodesic_distance(&self, a: &Point, b: &Point) -> Result<f64> {
        self.check_point(a)?;
        self.check_point(b)?;
        Ok(self.distance_unchecked(a, b))
    }

    pub(crate) fn distance_unchecked(&self, a: &Point, b: &Point) -> f64 {
        let theta = self.chord_angle(a, b);
        match self.kind() {
            ModelKind::Euclidean => theta,
            _ => theta / self.sqrt_abs_delta(),
        }
    }

    /// Inverse exponential map: the tangent vector at `p` pointing to `x`.
    pub fn log_map(&self, p: &Point, x: &Point) -> Result<DVector<f64>> {
        self.check_point(p)?;
        self.check_point(x)?;
        self.log_unchecked(p, x)
    }

    pub(crate) fn log_unchecked(&self, p: &Point, x: &Point) -> Result<DVector<f64>> {
        let diff = x - p;
        match self.kind() {
            ModelKind::Euclidean => Ok(diff),
            ModelKind::Sphere => {
                let theta = self.chord_angle(p, x);
                if theta > std::f64::consts::PI - 1e-9 {
                    return Err(Error::InjectivityDomain(format!(
                        "points are (nearly) antipodal, angle {theta}"
                    )));
                }
                // x - cos θ p, written without cancellation.
                let s2 = (theta / 2.0).sin();
                let u = diff + p * (2.0 * s2 * s2);
                Ok(u * angle_ratio(self.delta, theta))
            }
            ModelKind::Hyperbolic => {
                let theta = self.chord_angle(p, x);
                let s2 = (theta / 2.0).sinh();
                let u = diff - p * (2.0 * s2 * s2);
                Ok(u * angle_ratio(self.delta, theta))
            }
        }
    }

    pub fn exp_map(&self, p: &Point, v: &DVector<f64>) -> Result<Point> {
        self.check_point(p)?;
        if v.len() != p.len() {
            return Err(Error::InvalidPoint("tangent vector dimension mismatch".into()));
        }
        if self.kind() != ModelKind::Euclidean {
            let defect = self.inner(p, v).abs() * self.delta.abs().sqrt();
            if defect > 1e-10 * (1.0 + v.norm()) {
                return Err(Error::NotTangent(defect));
            }
        }
        Ok(self.exp_unchecked(p, v))
    }

    pub(crate) fn exp_unchecked(&self, p: &Point, v: &DVector<f64>) -> Point {
        match self.kind() {
            ModelKind::Euclidean => p + v,
            kind => {
                let k = self.sqrt_abs_delta();
                let theta = k * self.tangent_norm(v);
                if theta == 0.0 {
                    return p.clone();
                }
                let (c, s_over) = if kind == ModelKind::Sphere {
                    (theta.cos(), theta.sin() / theta)
                } else {
                    (theta.cosh(), theta.sinh() / theta)
                };
                self.reproject_if_drifted(p * c + v * s_over)
            }
        }
    }

    /// Project an arbitrary representation vector onto the tangent space at `p`.
    pub fn to_tangent(&self, p: &Point, v: &DVector<f64>) -> DVector<f64> {
        match self.kind() {
            ModelKind::Euclidean => v.clone(),
            _ => {
                let pp = self.inner(p, p);
                v - p * (self.inner(p, v) / pp)
            }
        }
    }

    /// Orthonormal basis of the tangent space at `p` (columns, representation coordinates).
    ///
    /// For curved models the basis is oriented so that `det[p | basis] > 0`,
    /// which matches the standard orientation of ℝᴺ near the pole `e₀`.
    pub fn tangent_basis(&self, p: &Point) -> DMatrix<f64> {
        let n = self.ambient_dim;
        if self.kind() == ModelKind::Euclidean {
            return DMatrix::identity(n, n);
        }
        let dim = self.repr_dim();
        let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
        // Gram-Schmidt over the standard basis, skipping the most p-aligned vector.
        let mut candidates: Vec<usize> = (0..dim).collect();
        let worst = (0..dim)
            .max_by(|&a, &b| p[a].abs().total_cmp(&p[b].abs()))
            .unwrap_or(0);
        candidates.retain(|&i| i != worst);
        candidates.push(worst);
        for i in candidates {
            if cols.len() == n {
                break;
            }
            let mut e = DVector::zeros(dim);
            e[i] = 1.0;
            let mut v = self.to_tangent(p, &e);
            for _ in 0..2 {
                for c in &cols {
                    let proj = self.inner(c, &v);
                    v -= c * proj;
                }
            }
            let nv = self.tangent_norm(&v);
            if nv > 1e-8 {
                cols.push(v / nv);
            }
        }
        let mut basis = DMatrix::from_columns(&cols);
        let mut full = DMatrix::zeros(dim, dim);
        full.set_column(0, p);
        for j in 0..n {
            full.set_column(j + 1, &basis.column(j));
        }
        if full.determinant() < 0.0 {
            let flipped = -basis.column(n - 1);
            basis.set_column(n - 1, &flipped);
        }
        basis
    }

    /// Coordinates of a tangent vector at `p` in the basis returned by [`Self::tangent_basis`].
    pub fn tangent_coords(&self, basis: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            basis.ncols(),
            (0..basis.ncols()).map(|j| self.inner(&basis.column(j).into_owned(), v)),
        )
    }

    pub fn radial_frame(&self, p: &Point, vertices: &[Point]) -> Result<RadialFrame> {
        self.check_point(p)?;
        let basis = self.tangent_basis(p);
        let mut r = Vec::with_capacity(vertices.len());
        let mut normal_coords = Vec::with_capacity(vertices.len());
        let mut x_field = Vec::with_capacity(vertices.len());
        for v in vertices {
            self.check_point(v)?;
            let lv = self.log_unchecked(p, v)?;
            let dist = self.distance_unchecked(p, v);
            if self.delta > 0.0 && dist >= std::f64::consts::PI / (2.0 * self.delta.sqrt()) {
                return Err(Error::InjectivityDomain(format!(
                    "vertex at distance {dist} outside the ball of radius pi/(2 sqrt(delta))"
                )));
            }
            let coords = self.tangent_coords(&basis, &lv);
            // X = s(r) grad r, and grad r at v is minus the unit direction back to p.
            let x = if dist == 0.0 {
                DVector::zeros(p.len())
            } else {
                let back = self.log_unchecked(v, p)?;
                let (s, _) = profile_unchecked(self.delta, dist);
                back * (-s / dist)
            };
            r.push(dist);
            normal_coords.push(coords);
            x_field.push(x);
        }
        Ok(RadialFrame { base_point: p.clone(), basis, r, normal_coords, x_field })
    }
}

/// Radial data about a base point for a list of vertices.
#[derive(Clone, Debug)]
pub struct RadialFrame {
    pub base_point: Point,
    /// Orthonormal basis of the tangent space at the base point.
    pub basis: DMatrix<f64>,
    pub r: Vec<f64>,
    /// Normal coordinates `x_i` of each vertex (the log map, in `basis`).
    pub normal_coords: Vec<DVector<f64>>,
    /// The position field `X = s_δ(r)∇̄r` at each vertex, as a representation vector.
    pub x_field: Vec<DVector<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn v(c: &[f64]) -> Point {
        DVector::from_column_slice(c)
    }

    #[test]
    fn profile_examples() {
        assert_eq!(radial_profile(0.0, 1.7).unwrap(), (1.7, 1.0));
        let (s, c) = radial_profile(1.0, PI / 2.0).unwrap();
        assert_relative_eq!(s, 1.0, epsilon = 1e-15);
        assert!(c.abs() < 1e-15);
        let (s, c) = radial_profile(-1.0, 1.0).unwrap();
        assert_relative_eq!(s, 1.0_f64.sinh(), epsilon = 1e-15);
        assert_relative_eq!(c, 1.0_f64.cosh(), epsilon = 1e-15);
        assert!(matches!(radial_profile(0.0, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn profile_is_continuous_in_delta() {
        let (s0, c0) = radial_profile(0.0, 0.8).unwrap();
        for d in [1e-9, -1e-9] {
            let (s, c) = radial_profile(d, 0.8).unwrap();
            assert!((s - s0).abs() < 1e-9 && (c - c0).abs() < 1e-9);
        }
    }

    #[test]
    fn distance_examples() {
        let e = SpaceForm::euclidean(3);
        assert_relative_eq!(
            e.geodesic_distance(&v(&[0., 0., 0.]), &v(&[3., 4., 0.])).unwrap(),
            5.0
        );
        let s = SpaceForm::new(1.0, 2).unwrap();
        let d = s.geodesic_distance(&v(&[0., 0., 1.]), &v(&[1., 0., 0.])).unwrap();
        assert_relative_eq!(d, PI / 2.0, epsilon = 1e-14);
        let h = SpaceForm::new(-1.0, 3).unwrap();
        let b = v(&[1f64.cosh(), 1f64.sinh(), 0., 0.]);
        let d = h.geodesic_distance(&v(&[1., 0., 0., 0.]), &b).unwrap();
        assert_relative_eq!(d, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn log_examples() {
        let s = SpaceForm::new(1.0, 2).unwrap();
        let l = s.log_map(&v(&[0., 0., 1.]), &v(&[1., 0., 0.])).unwrap();
        assert_relative_eq!(l, v(&[PI / 2.0, 0., 0.]), epsilon = 1e-14);
        let e = SpaceForm::euclidean(2);
        assert_eq!(e.log_map(&v(&[1., 2.]), &v(&[4., 6.])).unwrap(), v(&[3., 4.]));
        assert!(matches!(
            s.log_map(&v(&[0., 0., 1.]), &v(&[0., 0., -1.])),
            Err(Error::InjectivityDomain(_))
        ));
    }

    #[test]
    fn exp_rejects_non_tangent() {
        let s = SpaceForm::new(1.0, 2).unwrap();
        let r = s.exp_map(&v(&[0., 0., 1.]), &v(&[0., 0.1, 0.1]));
        assert!(matches!(r, Err(Error::NotTangent(_))));
        let p = v(&[0., 0., 1.]);
        assert_eq!(s.exp_map(&p, &v(&[0., 0., 0.])).unwrap(), p);
    }

    #[test]
    fn invalid_point_rejected() {
        let s = SpaceForm::new(1.0, 2).unwrap();
        assert!(matches!(
            s.geodesic_distance(&v(&[0., 0., 1.1]), &v(&[1., 0., 0.])),
            Err(Error::InvalidPoint(_))
        ));
    }

    #[test]
    fn radial_frame_examples() {
        let e = SpaceForm::euclidean(3);
        let verts = vec![v(&[1., 2., 3.]), v(&[0., 0., 0.])];
        let f = e.radial_frame(&v(&[0., 0., 0.]), &verts).unwrap();
        assert_relative_eq!(f.x_field[0], verts[0], epsilon = 1e-14);
        assert_eq!(f.r[1], 0.0);
        assert_eq!(f.x_field[1].norm(), 0.0);
        assert_eq!(f.normal_coords[1].norm(), 0.0);

        let s = SpaceForm::new(1.0, 3).unwrap();
        let pole = v(&[1., 0., 0., 0.]);
        let tilt: f64 = 1.2;
        let verts = vec![v(&[tilt.cos(), tilt.sin(), 0., 0.])];
        let f = s.radial_frame(&pole, &verts).unwrap();
        assert_relative_eq!(f.x_field[0].norm(), tilt.sin(), epsilon = 1e-13);
        assert_relative_eq!(f.normal_coords[0].norm(), tilt, epsilon = 1e-13);
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        for space in [SpaceForm::new(2.0, 3).unwrap(), SpaceForm::new(-0.5, 3).unwrap()] {
            let p = space.project(&v(&[0.3, 0.2, -0.4, 0.5]));
            let b = space.tangent_basis(&p);
            for i in 0..3 {
                let bi = b.column(i).into_owned();
                assert!(space.inner(&bi, &p).abs() < 1e-12);
                for j in 0..3 {
                    let bj = b.column(j).into_owned();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((space.inner(&bi, &bj) - expect).abs() < 1e-12);
                }
            }
        }
    }

    fn model_point(delta: f64, a: f64, b: f64, c: f64) -> (SpaceForm, Point) {
        let space = SpaceForm::new(delta, 3).unwrap();
        let raw = match space.kind() {
            ModelKind::Euclidean => v(&[a, b, c]),
            ModelKind::Sphere => v(&[a, b, c, 1.0]),
            ModelKind::Hyperbolic => v(&[1.0, a, b, c]),
        };
        (space, match space.kind() {
            ModelKind::Euclidean => raw,
            ModelKind::Sphere => &raw / (raw.norm() * delta.sqrt()),
            ModelKind::Hyperbolic => {
                let tail = raw.rows(1, 3).norm_squared();
                let mut x = raw.clone();
                x[0] = (1.0 / -delta + tail).sqrt();
                x
            }
        })
    }

    proptest::proptest! {
        #[test]
        fn profile_satisfies_pythagoras(delta in -4.0..4.0f64, t in 0.0..0.99f64) {
            let r = if delta > 0.0 { t * PI / delta.sqrt() } else { 3.0 * t };
            let (s, c) = radial_profile(delta, r).unwrap();
            proptest::prop_assert!((c * c + delta * s * s - 1.0).abs() < 1e-9 * (1.0 + c * c));
        }

        #[test]
        fn exp_inverts_log(
            delta in proptest::sample::select(vec![-1.0, -0.25, 0.0, 0.5, 1.0]),
            p in proptest::collection::vec(-1.0..1.0f64, 3),
            q in proptest::collection::vec(-1.0..1.0f64, 3),
        ) {
            let (space, x) = model_point(delta, p[0], p[1], p[2]);
            let (_, y) = model_point(delta, q[0], q[1], q[2]);
            let d = space.geodesic_distance(&x, &y).unwrap();
            proptest::prop_assume!(delta <= 0.0 || d < 0.9 * PI / delta.sqrt());
            let l = space.log_map(&x, &y).unwrap();
            proptest::prop_assert!((space.tangent_norm(&l) - d).abs() < 1e-9 * (1.0 + d));
            let back = space.exp_map(&x, &l).unwrap();
            proptest::prop_assert!((back - &y).norm() < 1e-8 * (1.0 + y.norm()));
        }

        #[test]
        fn distance_is_a_metric(
            delta in proptest::sample::select(vec![-1.0, 0.0, 1.0]),
            a in proptest::collection::vec(-1.0..1.0f64, 3),
            b in proptest::collection::vec(-1.0..1.0f64, 3),
            c in proptest::collection::vec(-1.0..1.0f64, 3),
        ) {
            let (space, x) = model_point(delta, a[0], a[1], a[2]);
            let (_, y) = model_point(delta, b[0], b[1], b[2]);
            let (_, z) = model_point(delta, c[0], c[1], c[2]);
            let d = |u: &Point, w: &Point| space.geodesic_distance(u, w).unwrap();
            proptest::prop_assert!((d(&x, &y) - d(&y, &x)).abs() < 1e-12);
            proptest::prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-9);
        }
    }
}
