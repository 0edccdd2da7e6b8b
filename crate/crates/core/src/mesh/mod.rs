//! Triangulated surfaces immersed in a model space, carrying a density `f`.
//!
//! The intrinsic geometry is piecewise flat: each triangle is laid out in the
//! plane from its three geodesic edge lengths. Finite elements, curvature
//! frames and quadrature all read from that layout.

mod boundary;
mod io;
mod shapes;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DVector, Matrix2};
use serde::{Deserialize, Serialize};

pub use boundary::{boundary_complex, BoundaryCurve};
pub use io::{parse_mesh, write_mesh};
pub use shapes::{generate_shape, DensityPreset, ShapeKind, ShapeSpec};

use crate::error::{Error, Result};
use crate::spaceform::{Point, SpaceForm};

/// Two-point Gauss abscissae on [0, 1].
pub(crate) const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// Planar layout of one triangle from its geodesic edge lengths.
///
/// Vertex 0 sits at the origin, vertex 1 on the positive first axis and
/// vertex 2 in the upper half plane. This is the "triangle frame" in which
/// per-triangle tensors are expressed.
#[derive(Clone, Debug)]
pub struct TriangleGeometry {
    /// Edge lengths `[|v0v1|, |v1v2|, |v2v0|]`.
    pub lengths: [f64; 3],
    pub area: f64,
    pub layout: [[f64; 2]; 3],
    /// Gradients of the barycentric (P1 hat) functions in the triangle frame.
    pub grads: [[f64; 2]; 3],
}

impl TriangleGeometry {
    pub fn from_lengths(l01: f64, l12: f64, l20: f64) -> Option<Self> {
        let x = (l01 * l01 + l20 * l20 - l12 * l12) / (2.0 * l01);
        let y2 = l20 * l20 - x * x;
        if !(l01 > 0.0 && l12 > 0.0 && l20 > 0.0) || !(y2 > 0.0) {
            return None;
        }
        let y = y2.sqrt();
        let layout = [[0.0, 0.0], [l01, 0.0], [x, y]];
        let area = 0.5 * l01 * y;
        let mut grads = [[0.0; 2]; 3];
        for (i, g) in grads.iter_mut().enumerate() {
            let a = layout[(i + 1) % 3];
            let b = layout[(i + 2) % 3];
            // Rotate the opposite edge by -90° and scale.
            let e = [b[0] - a[0], b[1] - a[1]];
            *g = [-e[1] / (2.0 * area), e[0] / (2.0 * area)];
        }
        Some(Self { lengths: [l01, l12, l20], area, layout, grads })
    }

    /// Flat metric in the basis of the edge vectors `(v0v1, v0v2)`.
    pub fn metric(&self) -> Matrix2<f64> {
        let e1 = self.layout[1];
        let e2 = self.layout[2];
        Matrix2::new(
            e1[0] * e1[0] + e1[1] * e1[1],
            e1[0] * e2[0] + e1[1] * e2[1],
            e1[0] * e2[0] + e1[1] * e2[1],
            e2[0] * e2[0] + e2[1] * e2[1],
        )
    }

    /// Gradient of the P1 interpolant of vertex values, in the triangle frame.
    pub fn gradient(&self, values: [f64; 3]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for i in 0..3 {
            g[0] += values[i] * self.grads[i][0];
            g[1] += values[i] * self.grads[i][1];
        }
        g
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedMeasures {
    pub element_area_f: Vec<f64>,
    pub boundary_length_f: Vec<f64>,
    pub total_volume_f: f64,
    pub boundary_volume_f: f64,
}

#[derive(Clone, Debug)]
pub struct ImmersedMesh {
    space: SpaceForm,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    density: Vec<f64>,
    boundary_edges: Vec<(usize, usize)>,
    geometry: Vec<TriangleGeometry>,
    vertex_triangles: Vec<Vec<usize>>,
}

impl ImmersedMesh {
    pub fn new(
        space: SpaceForm,
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        density: Vec<f64>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if nv < 3 || triangles.is_empty() {
            return Err(Error::NonManifold("mesh needs at least one triangle".into()));
        }
        if density.len() != nv {
            return Err(Error::NonManifold(format!(
                "density has {} values for {nv} vertices",
                density.len()
            )));
        }
        if let Some(bad) = density.iter().position(|f| !f.is_finite()) {
            return Err(Error::Domain(format!("density at vertex {bad} is not finite")));
        }
        for (i, v) in vertices.iter().enumerate() {
            space
                .check_point(v)
                .map_err(|e| Error::InvalidPoint(format!("vertex {i}: {e}")))?;
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::NonManifold(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::NonManifold(format!("triangle {t} repeats a vertex")));
            }
        }

        // Directed edge -> triangle; each directed edge may appear once.
        let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if directed.insert(e, t).is_some() {
                    return Err(Error::NonManifold(format!(
                        "edge ({}, {}) used twice with the same orientation (or by >2 triangles)",
                        e.0, e.1
                    )));
                }
            }
        }
        let mut undirected: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &(a, b) in directed.keys() {
            *undirected.entry((a.min(b), a.max(b))).or_default() += 1;
        }
        if let Some((e, _)) = undirected.iter().find(|(_, &c)| c > 2) {
            return Err(Error::NonManifold(format!("edge {e:?} shared by more than 2 triangles")));
        }
        let boundary_edges: Vec<(usize, usize)> = directed
            .keys()
            .copied()
            .filter(|&(a, b)| !directed.contains_key(&(b, a)))
            .collect();

        let mut vertex_triangles = vec![Vec::new(); nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_triangles[v].push(t);
            }
        }
        if let Some(v) = vertex_triangles.iter().position(Vec::is_empty) {
            return Err(Error::NonManifold(format!("vertex {v} is not used by any triangle")));
        }
        // Each vertex star must be a single fan.
        for (v, star) in vertex_triangles.iter().enumerate() {
            let mut link: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &t in star {
                let tri = triangles[t];
                let k = tri.iter().position(|&x| x == v).unwrap();
                let (b, c) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                link.entry(b).or_default().push(c);
                link.entry(c).or_default().push(b);
            }
            let ends = link.values().filter(|n| n.len() == 1).count();
            if link.values().any(|n| n.len() > 2) || !(ends == 0 || ends == 2) {
                return Err(Error::NonManifold(format!("vertex {v} has a non-manifold star")));
            }
            let start = *link.keys().next().unwrap();
            let mut seen = BTreeSet::from([start]);
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &w in &link[&u] {
                    if seen.insert(w) {
                        stack.push(w);
                    }
                }
            }
            if seen.len() != link.len() {
                return Err(Error::NonManifold(format!("vertex {v} joins two separate fans")));
            }
        }
        // Connectivity.
        let mut seen = vec![false; nv];
        let mut stack = vec![triangles[0][0]];
        seen[triangles[0][0]] = true;
        while let Some(v) = stack.pop() {
            for &t in &vertex_triangles[v] {
                for &w in &triangles[t] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::NonManifold("triangle complex is not connected".into()));
        }

        let mut geometry = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let d = |a: usize, b: usize| space.distance_unchecked(&vertices[a], &vertices[b]);
            let (l01, l12, l20) = (d(tri[0], tri[1]), d(tri[1], tri[2]), d(tri[2], tri[0]));
            let longest = l01.max(l12).max(l20);
            let slack = l01 + l12 + l20 - 2.0 * longest;
            if slack <= 1e-12 * longest {
                return Err(Error::Degenerate {
                    index: t,
                    msg: format!("edge lengths {l01}, {l12}, {l20} violate the strict triangle inequality"),
                });
            }
            let g = TriangleGeometry::from_lengths(l01, l12, l20).ok_or_else(|| Error::Degenerate {
                index: t,
                msg: "layout failed".into(),
            })?;
            geometry.push(g);
        }
        let mean_area = geometry.iter().map(|g| g.area).sum::<f64>() / geometry.len() as f64;
        if let Some(t) = geometry.iter().position(|g| g.area < 1e-12 * mean_area) {
            return Err(Error::Degenerate { index: t, msg: "area below 1e-12 x mean area".into() });
        }

        Ok(Self { space, vertices, triangles, density, boundary_edges, geometry, vertex_triangles })
    }

    pub fn space(&self) -> &SpaceForm {
        &self.space
    }
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }
    pub fn density(&self) -> &[f64] {
        &self.density
    }
    pub fn intrinsic_dim(&self) -> usize {
        2
    }
    pub fn boundary_edges(&self) -> &[(usize, usize)] {
        &self.boundary_edges
    }
    pub fn is_closed(&self) -> bool {
        self.boundary_edges.is_empty()
    }
    pub fn geometry(&self) -> &[TriangleGeometry] {
        &self.geometry
    }
    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[v]
    }
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Replace the density, keeping the geometry.
    pub fn with_density(&self, density: Vec<f64>) -> Result<Self> {
        if density.len() != self.vertices.len() || density.iter().any(|f| !f.is_finite()) {
            return Err(Error::Domain("density must be finite with one value per vertex".into()));
        }
        let mut out = self.clone();
        out.density = density;
        Ok(out)
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.boundary_edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        set.into_iter().collect()
    }

    pub fn edge_count(&self) -> usize {
        let mut set = BTreeSet::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    /// Vertex neighbours sharing an edge, sorted.
    pub fn one_ring(&self, v: usize) -> Vec<usize> {
        let set: BTreeSet<usize> = self.vertex_triangles[v]
            .iter()
            .flat_map(|&t| self.triangles[t])
            .filter(|&w| w != v)
            .collect();
        set.into_iter().collect()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let s: f64 = self.geometry.iter().map(|g| g.lengths.iter().sum::<f64>()).sum();
        s / (3.0 * self.geometry.len() as f64)
    }

    /// Per-triangle flat metric in edge-vector coordinates.
    pub fn induced_metric(&self) -> Vec<Matrix2<f64>> {
        self.geometry.iter().map(TriangleGeometry::metric).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges
            .iter()
            .map(|&(a, b)| self.space.distance_unchecked(&self.vertices[a], &self.vertices[b]))
            .sum()
    }

    /// `e^{-f}` at the three edge midpoints `(01, 12, 20)` of a triangle.
    pub(crate) fn midpoint_weights(&self, t: usize) -> [f64; 3] {
        let tri = self.triangles[t];
        let f = |k: usize| {
            let a = self.density[tri[k]];
            let b = self.density[tri[(k + 1) % 3]];
            (-(a + b) / 2.0).exp()
        };
        [f(0), f(1), f(2)]
    }

    /// `e^{-f}` at the two Gauss points of a boundary edge, from `a` to `b`.
    pub(crate) fn gauss_weights(&self, a: usize, b: usize) -> [f64; 2] {
        let (fa, fb) = (self.density[a], self.density[b]);
        GAUSS2.map(|x| (-((1.0 - x) * fa + x * fb)).exp())
    }

    pub fn weighted_measures(&self) -> WeightedMeasures {
        let element_area_f: Vec<f64> = (0..self.triangles.len())
            .map(|t| self.geometry[t].area / 3.0 * self.midpoint_weights(t).iter().sum::<f64>())
            .collect();
        let boundary_length_f: Vec<f64> = self
            .boundary_edges
            .iter()
            .map(|&(a, b)| {
                let l = self.space.distance_unchecked(&self.vertices[a], &self.vertices[b]);
                l / 2.0 * self.gauss_weights(a, b).iter().sum::<f64>()
            })
            .collect();
        let total_volume_f = element_area_f.iter().sum();
        let boundary_volume_f = boundary_length_f.iter().sum();
        WeightedMeasures { element_area_f, boundary_length_f, total_volume_f, boundary_volume_f }
    }

    /// Lumped unweighted vertex areas (one third of each incident triangle).
    pub fn vertex_areas(&self) -> DVector<f64> {
        let mut w = DVector::zeros(self.vertices.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                w[v] += self.geometry[t].area / 3.0;
            }
        }
        w
    }

    /// Lumped unweighted boundary lengths (half of each incident boundary edge).
    pub fn boundary_vertex_lengths(&self) -> DVector<f64> {
        let mut w = DVector::zeros(self.vertices.len());
        for &(a, b) in &self.boundary_edges {
            let l = self.space.distance_unchecked(&self.vertices[a], &self.vertices[b]);
            w[a] += l / 2.0;
            w[b] += l / 2.0;
        }
        w
    }

    /// Lumped weighted vertex areas `∫ φ_v e^{-f}` (row sums of the mass matrix).
    pub fn vertex_weights(&self) -> DVector<f64> {
        let mut w = DVector::zeros(self.vertices.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let m = self.midpoint_weights(t);
            let a3 = self.geometry[t].area / 3.0;
            for k in 0..3 {
                // Vertex k touches midpoints of edges (k, k+1) and (k-1, k).
                w[tri[k]] += a3 * 0.5 * (m[k] + m[(k + 2) % 3]);
            }
        }
        w
    }

    /// Lumped weighted boundary vertex lengths (row sums of the boundary mass).
    pub fn boundary_vertex_weights(&self) -> DVector<f64> {
        let mut w = DVector::zeros(self.vertices.len());
        for &(a, b) in &self.boundary_edges {
            let l = self.space.distance_unchecked(&self.vertices[a], &self.vertices[b]);
            let g = self.gauss_weights(a, b);
            for (q, x) in GAUSS2.iter().enumerate() {
                w[a] += l / 2.0 * g[q] * (1.0 - x);
                w[b] += l / 2.0 * g[q] * x;
            }
        }
        w
    }

    /// Scale a flat mesh by `s` (Euclidean models only).
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if self.space.delta != 0.0 {
            return Err(Error::Domain("scaling is only defined for flat ambient space".into()));
        }
        Self::new(
            self.space,
            self.vertices.iter().map(|v| v * s).collect(),
            self.triangles.clone(),
            self.density.clone(),
        )
    }

    pub fn translated(&self, offset: &DVector<f64>) -> Result<Self> {
        if self.space.delta != 0.0 {
            return Err(Error::Domain("translation is only defined for flat ambient space".into()));
        }
        Self::new(
            self.space,
            self.vertices.iter().map(|v| v + offset).collect(),
            self.triangles.clone(),
            self.density.clone(),
        )
    }
}
