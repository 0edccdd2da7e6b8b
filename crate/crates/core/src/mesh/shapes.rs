//! Builtin analytic test geometries.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ImmersedMesh;
use crate::error::{Error, Result};
use crate::spaceform::{profile_unchecked, Point, SpaceForm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ShapeKind {
    RoundSphere { radius: f64, center: Vec<f64> },
    Ellipsoid { a: f64, b: f64, c: f64 },
    FlatDisk { radius: f64 },
    Hemisphere,
    Annulus { r0: f64, r1: f64 },
    #[serde(rename = "geodesic_sphere_in_S3")]
    GeodesicSphereS3 { rho: f64, delta: f64 },
    #[serde(rename = "geodesic_sphere_in_H3")]
    GeodesicSphereH3 { rho: f64, delta: f64 },
    #[serde(rename = "spherical_cap_in_S3")]
    SphericalCapS3 { rho: f64, delta: f64 },
}

impl ShapeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ShapeKind::RoundSphere { .. } => "round_sphere",
            ShapeKind::Ellipsoid { .. } => "ellipsoid",
            ShapeKind::FlatDisk { .. } => "flat_disk",
            ShapeKind::Hemisphere => "hemisphere",
            ShapeKind::Annulus { .. } => "annulus",
            ShapeKind::GeodesicSphereS3 { .. } => "geodesic_sphere_in_S3",
            ShapeKind::GeodesicSphereH3 { .. } => "geodesic_sphere_in_H3",
            ShapeKind::SphericalCapS3 { .. } => "spherical_cap_in_S3",
        }
    }

    pub fn space(&self) -> Result<SpaceForm> {
        match self {
            ShapeKind::GeodesicSphereS3 { delta, .. }
            | ShapeKind::GeodesicSphereH3 { delta, .. }
            | ShapeKind::SphericalCapS3 { delta, .. } => SpaceForm::new(*delta, 3),
            _ => Ok(SpaceForm::euclidean(3)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityPreset {
    #[default]
    Zero,
    /// `f(x) = a·x` in representation coordinates.
    Linear { a: Vec<f64> },
    /// `f(x) = a‖x‖²` with the Euclidean norm of representation coordinates.
    Quadratic { a: f64 },
}

impl DensityPreset {
    pub fn evaluate(&self, x: &Point) -> f64 {
        match self {
            DensityPreset::Zero => 0.0,
            DensityPreset::Linear { a } => a.iter().zip(x.iter()).map(|(a, x)| a * x).sum(),
            DensityPreset::Quadratic { a } => a * x.norm_squared(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub refinement: u32,
    pub density: DensityPreset,
    /// Seed for parameter-space jitter of interior vertices; `None` means none.
    pub jitter_seed: Option<u64>,
}

impl ShapeSpec {
    pub fn new(kind: ShapeKind, refinement: u32) -> Self {
        Self { kind, refinement, density: DensityPreset::Zero, jitter_seed: None }
    }

    pub fn with_density(mut self, density: DensityPreset) -> Self {
        self.density = density;
        self
    }

    pub fn with_jitter(mut self, seed: u64) -> Self {
        self.jitter_seed = Some(seed);
        self
    }
}

/// Parameter-domain triangulation: points plus a per-point "pinned" flag.
struct Patch {
    points: Vec<Vector3<f64>>,
    pinned: Vec<bool>,
    triangles: Vec<[usize; 3]>,
}

fn icosphere(level: u32) -> Patch {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut points: Vec<Vector3<f64>> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vector3::from(*p).normalize())
    .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, points: &mut Vec<Vector3<f64>>| -> usize {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                points.push((points[a] + points[b]).normalize());
                points.len() - 1
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for [a, b, c] in triangles {
            let ab = mid(a, b, &mut points);
            let bc = mid(b, c, &mut points);
            let ca = mid(c, a, &mut points);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    let pinned = vec![false; points.len()];
    Patch { points, pinned, triangles }
}

/// Stitch two concentric rings of point indices (angles starting at 0,
/// increasing counterclockwise) into a counterclockwise strip.
fn stitch(inner: &[usize], outer: &[usize], triangles: &mut Vec<[usize; 3]>) {
    let (p, q) = (inner.len(), outer.len());
    let (mut i, mut j) = (0, 0);
    while i < p || j < q {
        let next_in = (i + 1) as f64 / p as f64;
        let next_out = (j + 1) as f64 / q as f64;
        if j < q && (i == p || next_out <= next_in) {
            triangles.push([inner[i % p], outer[j], outer[(j + 1) % q]]);
            j += 1;
        } else {
            triangles.push([inner[i], outer[j % q], inner[(i + 1) % p]]);
            i += 1;
        }
    }
}

/// Concentric rings in the unit disk of the `(x, y)` parameter plane: `m`
/// rings, ring `j` holding `6j` points. The outer ring is pinned.
fn ring_disk(m: usize) -> Patch {
    let mut points = vec![Vector3::zeros()];
    let mut rings: Vec<Vec<usize>> = vec![vec![0]];
    for j in 1..=m {
        let count = 6 * j;
        let t = j as f64 / m as f64;
        let ring: Vec<usize> = (0..count)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / count as f64;
                points.push(Vector3::new(t * phi.cos(), t * phi.sin(), 0.0));
                points.len() - 1
            })
            .collect();
        rings.push(ring);
    }
    let mut triangles = Vec::new();
    let center = rings[0][0];
    let first = &rings[1];
    for i in 0..first.len() {
        triangles.push([center, first[i], first[(i + 1) % first.len()]]);
    }
    for j in 1..m {
        stitch(&rings[j], &rings[j + 1], &mut triangles);
    }
    let mut pinned = vec![false; points.len()];
    for &v in &rings[m] {
        pinned[v] = true;
    }
    Patch { points, pinned, triangles }
}

/// Rings of radius `1 + t`, `t ∈ [0, 1]`, in the `(x, y)` parameter plane
/// with a constant point count per ring; both end rings pinned.
fn ring_strip(rings: usize, count: usize) -> Patch {
    let mut points = Vec::new();
    let mut idx: Vec<Vec<usize>> = Vec::new();
    for j in 0..=rings {
        let t = 1.0 + j as f64 / rings as f64;
        let ring: Vec<usize> = (0..count)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / count as f64;
                points.push(Vector3::new(t * phi.cos(), t * phi.sin(), 0.0));
                points.len() - 1
            })
            .collect();
        idx.push(ring);
    }
    let mut triangles = Vec::new();
    for j in 0..rings {
        stitch(&idx[j], &idx[j + 1], &mut triangles);
    }
    let mut pinned = vec![false; points.len()];
    for &v in idx[0].iter().chain(&idx[rings]) {
        pinned[v] = true;
    }
    Patch { points, pinned, triangles }
}

fn jitter(patch: &mut Patch, seed: u64, spherical: bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Amplitude relative to the local parameter spacing.
    let h = patch
        .triangles
        .iter()
        .map(|t| (patch.points[t[0]] - patch.points[t[1]]).norm())
        .fold(f64::INFINITY, f64::min);
    for (p, &pinned) in patch.points.iter_mut().zip(&patch.pinned) {
        let mut noise = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0)) * (0.1 * h);
        if pinned {
            continue;
        }
        if spherical {
            *p = (*p + noise).normalize();
        } else {
            noise[2] = 0.0;
            *p += noise;
        }
    }
}

fn finish(
    space: SpaceForm,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    density: &DensityPreset,
) -> Result<ImmersedMesh> {
    if let DensityPreset::Linear { a } = density {
        if a.len() > space.repr_dim() {
            return Err(Error::InvalidShape(format!(
                "linear density has {} coefficients for {} coordinates",
                a.len(),
                space.repr_dim()
            )));
        }
    }
    let f = vertices.iter().map(|v| density.evaluate(v)).collect();
    ImmersedMesh::new(space, vertices, triangles, f)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidShape(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_radius(rho: f64, delta: f64, spherical: bool) -> Result<()> {
    positive("rho", rho)?;
    if spherical {
        positive("delta", delta)?;
        let limit = FRAC_PI_2 / delta.sqrt();
        if rho >= limit {
            return Err(Error::InvalidShape(format!("rho = {rho} must be below π/(2√δ) = {limit}")));
        }
    } else if !(delta < 0.0 && delta.is_finite()) {
        return Err(Error::InvalidShape(format!("hyperbolic delta must be negative, got {delta}")));
    }
    Ok(())
}

/// Point at distance `rho` from the model's pole in direction `u`.
fn polar_point(space: &SpaceForm, rho: f64, u: &Vector3<f64>) -> Point {
    let d = space.delta;
    let (s, c) = profile_unchecked(d, rho);
    let k = d.abs().sqrt();
    DVector::from_column_slice(&[c / k, s * u[0], s * u[1], s * u[2]])
}

pub fn generate_shape(spec: &ShapeSpec) -> Result<ImmersedMesh> {
    if spec.refinement > 8 {
        return Err(Error::InvalidShape(format!("refinement {} exceeds 8", spec.refinement)));
    }
    let k = spec.refinement;
    let space = spec.kind.space()?;
    let to_vec = |p: Vector3<f64>| DVector::from_column_slice(p.as_slice());
    match &spec.kind {
        ShapeKind::RoundSphere { radius, center } => {
            positive("radius", *radius)?;
            if !(center.is_empty() || center.len() == 3) {
                return Err(Error::InvalidShape("center must have 3 coordinates".into()));
            }
            let c = if center.is_empty() { Vector3::zeros() } else { Vector3::from_column_slice(center) };
            let mut patch = icosphere(k);
            if let Some(seed) = spec.jitter_seed {
                jitter(&mut patch, seed, true);
            }
            let verts = patch.points.iter().map(|u| to_vec(c + u * *radius)).collect();
            finish(space, verts, patch.triangles, &spec.density)
        }
        ShapeKind::Ellipsoid { a, b, c } => {
            positive("a", *a)?;
            positive("b", *b)?;
            positive("c", *c)?;
            let mut patch = icosphere(k);
            if let Some(seed) = spec.jitter_seed {
                jitter(&mut patch, seed, true);
            }
            let verts = patch.points.iter().map(|u| to_vec(Vector3::new(a * u[0], b * u[1], c * u[2]))).collect();
            finish(space, verts, patch.triangles, &spec.density)
        }
        ShapeKind::FlatDisk { radius } => {
            positive("radius", *radius)?;
            let mut patch = ring_disk(1 << k);
            if let Some(seed) = spec.jitter_seed {
                jitter(&mut patch, seed, false);
            }
            let verts = patch
                .points
                .iter()
                .map(|p| to_vec(p * *radius))
                .collect();
            finish(space, verts, patch.triangles, &spec.density)
        }
        ShapeKind::Hemisphere => {
            let mut patch = ring_disk(2 << k);
            if let Some(seed) = spec.jitter_seed {
                jitter(&mut patch, seed, false);
            }
            let verts = patch.points.iter().map(|p| to_vec(hemisphere_point(p))).collect();
            finish(space, verts, patch.triangles, &spec.density)
        }
        ShapeKind::Annulus { r0, r1 } => {
            positive("r0", *r0)?;
            if !(r1 > r0 && r1.is_finite()) {
                return Err(Error::InvalidShape(format!("annulus needs r0 < r1, got {r0}, {r1}")));
            }
            let count = 6 << k;
            let spacing = PI * (r0 + r1) / count as f64;
            let rings = ((r1 - r0) / spacing).round().max(1.0) as usize;
            let mut patch = ring_strip(rings, count);
            if let Some(seed) = spec.jitter_seed {
                jitter(&mut patch, seed, false);
            }
            let verts = patch
                .points
                .iter()
                .map(|p| {
                    let t = p.norm();
                    to_vec(p * ((r0 + (r1 - r0) * (t - 1.0)) / t))
                })
                .collect();
            finish(space, verts, patch.triangles, &spec.density)
        }
        ShapeKind::GeodesicSphereS3 { rho, delta } | ShapeKind::GeodesicSphereH3 { rho, delta } => {
            check_radius(*rho, *delta, matches!(spec.kind, ShapeKind::GeodesicSphereS3 { .. }))?;
            let mut patch = icosphere(k);
            if let Some(seed) = spec.jitter_seed {
                jitter(&mut patch, seed, true);
            }
            let verts = patch.points.iter().map(|u| polar_point(&space, *rho, u)).collect();
            finish(space, verts, patch.triangles, &spec.density)
        }
        ShapeKind::SphericalCapS3 { rho, delta } => {
            check_radius(*rho, *delta, true)?;
            let mut patch = ring_disk(2 << k);
            if let Some(seed) = spec.jitter_seed {
                jitter(&mut patch, seed, false);
            }
            let verts = patch.points.iter().map(|p| polar_point(&space, *rho, &hemisphere_point(p))).collect();
            finish(space, verts, patch.triangles, &spec.density)
        }
    }
}

/// Unit-disk parameter to the upper unit hemisphere, equal-angle in radius.
fn hemisphere_point(p: &Vector3<f64>) -> Vector3<f64> {
    let t = p.norm();
    let theta = FRAC_PI_2 * t;
    let scale = if t > 0.0 { theta.sin() / t } else { FRAC_PI_2 };
    Vector3::new(scale * p[0], scale * p[1], theta.cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::boundary_complex;

    fn signed_volume(m: &ImmersedMesh) -> f64 {
        let v = m.vertices();
        m.triangles()
            .iter()
            .map(|t| {
                let a = Vector3::from_column_slice(v[t[0]].as_slice());
                let b = Vector3::from_column_slice(v[t[1]].as_slice());
                let c = Vector3::from_column_slice(v[t[2]].as_slice());
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    #[test]
    fn round_sphere_counts_and_orientation() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::RoundSphere { radius: 1.0, center: vec![] }, 4)).unwrap();
        assert_eq!(m.num_vertices(), 2562);
        assert_eq!(m.triangles().len(), 5120);
        assert_eq!(m.euler_characteristic(), 2);
        assert!(signed_volume(&m) > 4.0);
        assert!((m.total_area() - 4.0 * PI).abs() < 0.01 * 4.0 * PI);
    }

    #[test]
    fn disk_is_counterclockwise_with_one_loop() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::FlatDisk { radius: 1.0 }, 4)).unwrap();
        assert_eq!(m.num_vertices(), 817);
        assert_eq!(m.euler_characteristic(), 1);
        for t in m.triangles() {
            let v = m.vertices();
            let cross = (v[t[1]][0] - v[t[0]][0]) * (v[t[2]][1] - v[t[0]][1])
                - (v[t[1]][1] - v[t[0]][1]) * (v[t[2]][0] - v[t[0]][0]);
            assert!(cross > 0.0);
        }
        assert_eq!(boundary_complex(&m).unwrap().loops.len(), 1);
        assert!((m.boundary_length() - 2.0 * PI).abs() < 0.01 * 2.0 * PI);
    }

    #[test]
    fn annulus_has_two_loops() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::Annulus { r0: 0.5, r1: 1.0 }, 3)).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
        assert_eq!(boundary_complex(&m).unwrap().loops.len(), 2);
    }

    #[test]
    fn geodesic_sphere_area() {
        let rho = PI / 6.0;
        let m = generate_shape(&ShapeSpec::new(ShapeKind::GeodesicSphereS3 { rho, delta: 1.0 }, 4)).unwrap();
        let exact = 4.0 * PI * rho.sin().powi(2);
        assert!((m.total_area() - exact).abs() < 0.01 * exact);
        let h = generate_shape(&ShapeSpec::new(ShapeKind::GeodesicSphereH3 { rho: 0.5, delta: -1.0 }, 3)).unwrap();
        let exact = 4.0 * PI * 0.5f64.sinh().powi(2);
        assert!((h.total_area() - exact).abs() < 0.02 * exact);
    }

    #[test]
    fn rejects_large_radius_in_sphere() {
        let r = generate_shape(&ShapeSpec::new(ShapeKind::GeodesicSphereS3 { rho: 2.0, delta: 1.0 }, 1));
        assert!(matches!(r, Err(Error::InvalidShape(_))));
    }

    #[test]
    fn jitter_is_reproducible_and_keeps_boundary() {
        let mut spec = ShapeSpec::new(ShapeKind::FlatDisk { radius: 1.0 }, 3);
        spec.jitter_seed = Some(7);
        let a = generate_shape(&spec).unwrap();
        let b = generate_shape(&spec).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        let plain = generate_shape(&ShapeSpec::new(ShapeKind::FlatDisk { radius: 1.0 }, 3)).unwrap();
        assert_ne!(a.vertices(), plain.vertices());
        for v in a.boundary_vertices() {
            assert_eq!(a.vertices()[v], plain.vertices()[v]);
        }
    }

    #[test]
    fn linear_density_on_sphere() {
        let spec = ShapeSpec::new(ShapeKind::RoundSphere { radius: 1.0, center: vec![] }, 4)
            .with_density(DensityPreset::Linear { a: vec![0.0, 0.0, 1.0] });
        let m = generate_shape(&spec).unwrap();
        let exact = 4.0 * PI * 1f64.sinh();
        let got = m.weighted_measures().total_volume_f;
        assert!((got - exact).abs() < 0.01 * exact);
    }
}
