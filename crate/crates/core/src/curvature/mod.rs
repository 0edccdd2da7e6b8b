//! Discrete second fundamental form by local quadratic jets, and the
//! curvature quantities derived from it.
//!
//! At each vertex the neighbours are mapped into geodesic normal
//! coordinates of the ambient model, where the Christoffel symbols vanish
//! at the origin, so the Euclidean second fundamental form of the mapped
//! cloud at the origin equals the ambient one.

mod drift;
mod tensor;

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};

pub use drift::{boundary_drift, drift_term, vertex_gradients, BoundaryDrift, BoundaryScalar, DriftField};
pub use tensor::{parse_tensor_file, write_tensor_file, TangentTensorField, TensorKind};

use crate::error::{Error, Result};
use crate::mesh::ImmersedMesh;

/// Curvature data at one vertex, expressed in the ambient tangent basis
/// `ambient_basis` (local coordinates in ℝᴺ).
#[derive(Clone, Debug)]
pub struct VertexCurvature {
    /// Orthonormal basis of the ambient tangent space (representation columns).
    pub ambient_basis: DMatrix<f64>,
    /// Orthonormal tangent frame of the surface, `N × 2`, local coordinates.
    pub tangent: DMatrix<f64>,
    /// Orthonormal normal frame, `N × (N − 2)`, local coordinates.
    pub normals: DMatrix<f64>,
    /// Second fundamental form component along each normal column.
    pub hessians: Vec<Matrix2<f64>>,
    /// Shape operator with respect to `unit_normal` (codimension one only).
    pub shape_operator: Option<Matrix2<f64>>,
    /// Inward unit normal in local coordinates (codimension one only).
    pub unit_normal: Option<DVector<f64>>,
}

impl VertexCurvature {
    /// `Σ_ij T_ij B_ij` in local coordinates, for `T` in the tangent frame.
    pub fn contract(&self, t: &Matrix2<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.tangent.nrows());
        for (k, h) in self.hessians.iter().enumerate() {
            out.axpy(t.dot(h), &self.normals.column(k), 1.0);
        }
        out
    }

    /// Mean curvature vector `(1/2) tr B`, local coordinates.
    pub fn mean_vector(&self) -> DVector<f64> {
        self.contract(&Matrix2::identity()) * 0.5
    }

    /// Principal curvatures (ascending) for hypersurfaces.
    pub fn principal_curvatures(&self) -> Option<[f64; 2]> {
        self.shape_operator.map(|a| {
            let e = SymmetricEigen::new(a).eigenvalues;
            [e[0].min(e[1]), e[0].max(e[1])]
        })
    }

    /// Normalized mean curvature `H_r = e_r(κ)/C(2, r)`, `r ∈ {0, 1, 2}`.
    pub fn h_r(&self, r: usize) -> Option<f64> {
        let a = self.shape_operator?;
        match r {
            0 => Some(1.0),
            1 => Some(a.trace() / 2.0),
            2 => Some(a.determinant()),
            _ => None,
        }
    }

    /// A local tangent vector given by frame coordinates.
    pub fn tangent_vector(&self, g: &Vector2<f64>) -> DVector<f64> {
        &self.tangent.column(0) * g[0] + &self.tangent.column(1) * g[1]
    }

    pub fn to_representation(&self, local: &DVector<f64>) -> DVector<f64> {
        &self.ambient_basis * local
    }
}

/// Per-vertex curvature plus the orthogonal maps from each triangle frame
/// to the tangent frame at each of its corners.
#[derive(Clone, Debug)]
pub struct CurvatureField {
    pub vertices: Vec<VertexCurvature>,
    /// `corner_maps[t][k]` sends triangle-frame vectors of triangle `t` to
    /// tangent-frame vectors at its corner `k`.
    pub corner_maps: Vec<[Matrix2<f64>; 3]>,
    pub codimension: usize,
}

impl CurvatureField {
    pub fn mean_vector(&self, v: usize) -> DVector<f64> {
        self.vertices[v].mean_vector()
    }

    pub fn mean_norms(&self) -> Vec<f64> {
        self.vertices.iter().map(|c| c.mean_vector().norm()).collect()
    }

    pub fn h_r(&self, r: usize) -> Result<Vec<f64>> {
        if self.codimension != 1 {
            return Err(Error::Tensor(format!(
                "higher mean curvatures need codimension 1, have {}",
                self.codimension
            )));
        }
        self.vertices
            .iter()
            .map(|c| c.h_r(r).ok_or_else(|| Error::Tensor(format!("r = {r} out of range for n = 2"))))
            .collect()
    }

    /// Transfer a triangle-frame tensor to the tangent frame at corner `k`.
    pub fn triangle_to_vertex(&self, t: usize, k: usize, m: &Matrix2<f64>) -> Matrix2<f64> {
        let u = &self.corner_maps[t][k];
        u * m * u.transpose()
    }

    pub fn vertex_to_triangle(&self, t: usize, k: usize, m: &Matrix2<f64>) -> Matrix2<f64> {
        let u = &self.corner_maps[t][k];
        u.transpose() * m * u
    }
}

fn ring(mesh: &ImmersedMesh, v: usize, depth: usize) -> Vec<usize> {
    let mut seen = BTreeSet::from([v]);
    let mut frontier = vec![v];
    for _ in 0..depth {
        let mut next = Vec::new();
        for &u in &frontier {
            for w in mesh.one_ring(u) {
                if seen.insert(w) {
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    seen.remove(&v);
    seen.into_iter().collect()
}

/// Orthonormal completion: returns `N × (N − 2)` columns orthogonal to `tangent`.
fn complement(tangent: &DMatrix<f64>) -> DMatrix<f64> {
    let n = tangent.nrows();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        for _ in 0..2 {
            for j in 0..2 {
                let c = tangent.column(j).dot(&e);
                e.axpy(-c, &tangent.column(j), 1.0);
            }
            for c in &cols {
                let d = c.dot(&e);
                e.axpy(-d, c, 1.0);
            }
        }
        let nrm = e.norm();
        if nrm > 1e-6 && cols.len() < n - 2 {
            cols.push(e / nrm);
        }
    }
    DMatrix::from_columns(&cols)
}

fn orthonormalize(t1: DVector<f64>, t2: DVector<f64>) -> DMatrix<f64> {
    let e1 = t1.normalize();
    let e2 = (&t2 - &e1 * e1.dot(&t2)).normalize();
    DMatrix::from_columns(&[e1, e2])
}

const FRAME_ITERATIONS: usize = 3;

/// Least squares through a Householder QR of the column-equilibrated design.
struct LeastSquares {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    col_scale: DVector<f64>,
}

impl LeastSquares {
    fn new(mut design: DMatrix<f64>) -> Option<Self> {
        let col_scale = DVector::from_iterator(design.ncols(), design.column_iter().map(|c| c.norm()));
        if col_scale.iter().any(|&s| !(s > 0.0)) {
            return None;
        }
        for (j, s) in col_scale.iter().enumerate() {
            design.column_mut(j).unscale_mut(*s);
        }
        let qr = design.qr();
        let r = qr.r();
        let diag: Vec<f64> = r.diagonal().iter().map(|d| d.abs()).collect();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        if !(lo > 1e-10 * hi) {
            return None;
        }
        Some(Self { q: qr.q(), r, col_scale })
    }

    fn solve(&self, rhs: DVector<f64>) -> DVector<f64> {
        let y = self.q.transpose() * rhs;
        let x = self.r.solve_upper_triangular(&y).unwrap_or_else(|| DVector::zeros(y.len()));
        x.component_div(&self.col_scale)
    }
}

/// Orthogonal polar factor of a nonsingular 2×2 matrix.
fn polar_factor(f: &Matrix2<f64>) -> Matrix2<f64> {
    if f.determinant() >= 0.0 {
        let a = (f[(1, 0)] - f[(0, 1)]).atan2(f[(0, 0)] + f[(1, 1)]);
        Matrix2::new(a.cos(), -a.sin(), a.sin(), a.cos())
    } else {
        let a = (f[(1, 0)] + f[(0, 1)]).atan2(f[(0, 0)] - f[(1, 1)]);
        Matrix2::new(a.cos(), a.sin(), a.sin(), -a.cos())
    }
}

/// Jet fit at every vertex.
///
/// Neighbours come from the two-ring (three-ring when fewer than five),
/// weighted by `exp(−d²/2σ²)` with `σ` the local mean edge length.
/// Boundary vertices see one-sided neighbourhoods and use the three-ring
/// with a cubic jet.
pub fn second_fundamental_form(mesh: &ImmersedMesh) -> Result<CurvatureField> {
    let space = mesh.space();
    let n_amb = space.ambient_dim;
    if n_amb < 3 {
        return Err(Error::Tensor("surfaces need an ambient dimension of at least 3".into()));
    }
    let verts = mesh.vertices();
    let mut out = Vec::with_capacity(verts.len());
    let mut local_cache: Vec<Vec<(usize, DVector<f64>)>> = Vec::with_capacity(verts.len());
    let on_boundary: BTreeSet<usize> = mesh.boundary_vertices().into_iter().collect();
    for v in 0..verts.len() {
        let p = &verts[v];
        let basis = space.tangent_basis(p);
        let mut nbrs = ring(mesh, v, if on_boundary.contains(&v) { 3 } else { 2 });
        let cubic = on_boundary.contains(&v) && nbrs.len() >= 12;
        if nbrs.len() < 5 {
            nbrs = ring(mesh, v, 3);
        }
        if nbrs.len() < 5 {
            return Err(Error::RankDeficientFit(v));
        }
        let local: Vec<(usize, DVector<f64>)> = nbrs
            .iter()
            .map(|&w| {
                let l = space.log_unchecked(p, &verts[w])?;
                Ok((w, space.tangent_coords(&basis, &l)))
            })
            .collect::<Result<_>>()?;
        let one: Vec<usize> = mesh.one_ring(v);
        let sigma = one.iter().map(|&w| space.distance_unchecked(p, &verts[w])).sum::<f64>() / one.len() as f64;
        let weights: Vec<f64> =
            local.iter().map(|(_, q)| (-q.norm_squared() / (2.0 * sigma * sigma)).exp()).collect();

        // Initial tangent plane from the weighted second-moment matrix.
        let mut cov = DMatrix::zeros(n_amb, n_amb);
        for ((_, q), w) in local.iter().zip(&weights) {
            cov += q * q.transpose() * *w;
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..n_amb).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut tangent =
            orthonormalize(eig.eigenvectors.column(order[0]).into_owned(), eig.eigenvectors.column(order[1]).into_owned());

        let mut normals = complement(&tangent);
        let mut hessians = Vec::new();
        for iter in 0..=FRAME_ITERATIONS {
            normals = complement(&tangent);
            let cols = if cubic { 9 } else { 5 };
            let mut design = DMatrix::zeros(local.len(), cols);
            for (i, ((_, q), w)) in local.iter().zip(&weights).enumerate() {
                let (x, y) = (tangent.column(0).dot(q), tangent.column(1).dot(q));
                let row = [x, y, 0.5 * x * x, x * y, 0.5 * y * y, x * x * x, x * x * y, x * y * y, y * y * y];
                design.set_row(i, &nalgebra::RowDVector::from_row_slice(&row[..cols]).scale(w.sqrt()));
            }
            let fit = LeastSquares::new(design).ok_or(Error::RankDeficientFit(v))?;
            let coefs: Vec<DVector<f64>> = (0..normals.ncols())
                .map(|k| {
                    fit.solve(DVector::from_iterator(
                        local.len(),
                        local.iter().zip(&weights).map(|((_, q), w)| normals.column(k).dot(q) * w.sqrt()),
                    ))
                })
                .collect();
            if iter == FRAME_ITERATIONS {
                hessians = coefs.iter().map(|c| Matrix2::new(c[2], c[3], c[3], c[4])).collect();
                break;
            }
            // Tilt the frame by the fitted gradient.
            let mut t1 = tangent.column(0).into_owned();
            let mut t2 = tangent.column(1).into_owned();
            for (k, c) in coefs.iter().enumerate() {
                t1.axpy(c[0], &normals.column(k), 1.0);
                t2.axpy(c[1], &normals.column(k), 1.0);
            }
            tangent = orthonormalize(t1, t2);
        }

        let (shape_operator, unit_normal) = if n_amb == 3 {
            let lookup = |w: usize| local.iter().find(|(i, _)| *i == w).map(|(_, q)| q.clone());
            let mut outward = DVector::zeros(3);
            for &t in mesh.vertex_triangles(v) {
                let tri = mesh.triangles()[t];
                let k = tri.iter().position(|&x| x == v).unwrap();
                let (qb, qc) = (lookup(tri[(k + 1) % 3]).unwrap(), lookup(tri[(k + 2) % 3]).unwrap());
                outward += qb.cross(&qc);
            }
            let nu = normals.column(0).into_owned();
            let sign = if nu.dot(&outward) > 0.0 { -1.0 } else { 1.0 };
            (Some(hessians[0] * sign), Some(nu * sign))
        } else {
            (None, None)
        };
        out.push(VertexCurvature { ambient_basis: basis, tangent, normals, hessians, shape_operator, unit_normal });
        local_cache.push(local);
    }

    // Corner maps from the triangle layout to each vertex tangent frame.
    let mut corner_maps = Vec::with_capacity(mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = &mesh.geometry()[t];
        let mut maps = [Matrix2::identity(); 3];
        for k in 0..3 {
            let v = tri[k];
            let vc = &out[v];
            let project = |w: usize| -> Vector2<f64> {
                let q = &local_cache[v].iter().find(|(i, _)| *i == w).unwrap().1;
                Vector2::new(vc.tangent.column(0).dot(q), vc.tangent.column(1).dot(q))
            };
            let (b, c) = ((k + 1) % 3, (k + 2) % 3);
            let lay = |i: usize| Vector2::new(g.layout[i][0] - g.layout[k][0], g.layout[i][1] - g.layout[k][1]);
            let l = Matrix2::from_columns(&[lay(b), lay(c)]);
            let pm = Matrix2::from_columns(&[project(tri[b]), project(tri[c])]);
            let f = pm * l.try_inverse().ok_or(Error::Degenerate { index: t, msg: "layout".into() })?;
            maps[k] = polar_factor(&f);
        }
        corner_maps.push(maps);
    }
    Ok(CurvatureField { vertices: out, corner_maps, codimension: n_amb - 2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_shape, ShapeKind, ShapeSpec};
    use crate::spaceform::SpaceForm;

    fn sphere(k: u32) -> ImmersedMesh {
        generate_shape(&ShapeSpec::new(ShapeKind::RoundSphere { radius: 1.0, center: vec![] }, k)).unwrap()
    }

    fn max_mean_error(m: &ImmersedMesh, exact: f64) -> f64 {
        let c = second_fundamental_form(m).unwrap();
        c.mean_norms().iter().map(|h| (h - exact).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn unit_sphere_mean_curvature_points_inward() {
        let m = sphere(4);
        let c = second_fundamental_form(&m).unwrap();
        for (v, vc) in c.vertices.iter().enumerate() {
            let h = vc.to_representation(&vc.mean_vector());
            assert!((h.norm() - 1.0).abs() < 6e-3);
            assert!(h.dot(&m.vertices()[v]) < -0.99);
            let a = vc.shape_operator.unwrap();
            assert!((a - Matrix2::identity()).norm() < 1e-2);
        }
    }

    #[test]
    fn sphere_fit_converges_at_second_order() {
        let e3 = max_mean_error(&sphere(3), 1.0);
        let e4 = max_mean_error(&sphere(4), 1.0);
        let ratio = e3 / e4;
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn flat_disk_has_no_curvature() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::FlatDisk { radius: 1.0 }, 3)).unwrap();
        assert!(max_mean_error(&m, 0.0) < 1e-10);
    }

    #[test]
    fn cylinder_patch_curvatures() {
        // Strip of the unit cylinder around the x axis.
        let (nu, nv) = (40usize, 21usize);
        let h = 0.05;
        let mut verts = Vec::new();
        for j in 0..nv {
            for i in 0..nu {
                let phi = (i as f64 - nu as f64 / 2.0) * h;
                let x = (j as f64 - nv as f64 / 2.0) * h;
                verts.push(DVector::from_column_slice(&[x, phi.sin(), phi.cos()]));
            }
        }
        let mut tris = Vec::new();
        for j in 0..nv - 1 {
            for i in 0..nu - 1 {
                let a = j * nu + i;
                tris.push([a, a + nu, a + 1]);
                tris.push([a + 1, a + nu, a + nu + 1]);
            }
        }
        let m = ImmersedMesh::new(SpaceForm::euclidean(3), verts, tris, vec![0.0; nu * nv]).unwrap();
        let c = second_fundamental_form(&m).unwrap();
        let mid = (nv / 2) * nu + nu / 2;
        let k = c.vertices[mid].principal_curvatures().unwrap();
        // errors of order h² = 2.5e-3
        assert!(k[0].abs() < 5e-3 && (k[1].abs() - 1.0).abs() < 5e-3, "{k:?}");
        assert!((c.vertices[mid].mean_vector().norm() - 0.5).abs() < 5e-3);
    }

    #[test]
    fn corner_maps_are_orthogonal() {
        let m = sphere(2);
        let c = second_fundamental_form(&m).unwrap();
        for maps in &c.corner_maps {
            for u in maps {
                assert!((u.transpose() * u - Matrix2::identity()).norm() < 1e-12);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn polar_factor_is_the_nearest_orthogonal_map(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, d in -3.0..3.0f64) {
            let f = Matrix2::new(a, b, c, d);
            proptest::prop_assume!(f.determinant().abs() > 1e-3);
            let u = polar_factor(&f);
            proptest::prop_assert!((u.transpose() * u - Matrix2::identity()).norm() < 1e-12);
            // `Uᵀ F` is the symmetric positive factor.
            let h = u.transpose() * f;
            proptest::prop_assert!((h - h.transpose()).norm() < 1e-9 * f.norm());
            proptest::prop_assert!(h.symmetric_eigenvalues().min() > 0.0);
        }

        #[test]
        fn least_squares_recovers_exact_quadratics(c in proptest::collection::vec(-2.0..2.0f64, 5), angle in 0.0..6.0f64) {
            let mut rows = Vec::new();
            let mut rhs = Vec::new();
            for i in 0..18 {
                let t = angle + i as f64 * 0.7;
                let rad = 0.01 * (1.0 + (i % 3) as f64);
                let (x, y) = (rad * t.cos(), rad * t.sin());
                let row = [x, y, 0.5 * x * x, x * y, 0.5 * y * y];
                rhs.push(row.iter().zip(&c).map(|(r, k)| r * k).sum::<f64>());
                rows.extend_from_slice(&row);
            }
            let fit = LeastSquares::new(DMatrix::from_row_slice(18, 5, &rows)).unwrap();
            let got = fit.solve(DVector::from_vec(rhs));
            for k in 0..5 {
                proptest::prop_assert!((got[k] - c[k]).abs() < 1e-7, "{} vs {}", got[k], c[k]);
            }
        }
    }
}
