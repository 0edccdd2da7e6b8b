use nalgebra::{DVector, Matrix2, Vector2};

use super::{CurvatureField, TangentTensorField};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryCurve, ImmersedMesh};

/// Per-vertex `H_T − T(∇f)` with its tangent and normal parts.
#[derive(Clone, Debug)]
pub struct DriftField {
    /// Intrinsic gradient of `f` in tangent-frame coordinates.
    pub grad_f: Vec<Vector2<f64>>,
    /// `H_T`, local coordinates.
    pub normal_part: Vec<DVector<f64>>,
    /// `−T(∇f)`, local coordinates.
    pub tangent_part: Vec<DVector<f64>>,
    /// The drift as a representation vector at each vertex.
    pub representation: Vec<DVector<f64>>,
    pub norms: Vec<f64>,
    pub traces: Vec<f64>,
    pub sup_norm: f64,
    pub inf_trace: f64,
    /// `∫ ‖H_T − T∇f‖² μ_f` with lumped vertex weights.
    pub integral_norm_sq: f64,
}

/// Intrinsic gradient of the P1 interpolant of `f`, averaged to vertices
/// with area weights.
pub fn vertex_gradients(mesh: &ImmersedMesh, field: &CurvatureField) -> Vec<Vector2<f64>> {
    let f = mesh.density();
    let mut acc = vec![Vector2::zeros(); mesh.num_vertices()];
    let mut wsum = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = &mesh.geometry()[t];
        let grad = g.gradient([f[tri[0]], f[tri[1]], f[tri[2]]]);
        let grad = Vector2::new(grad[0], grad[1]);
        for k in 0..3 {
            acc[tri[k]] += field.corner_maps[t][k] * grad * g.area;
            wsum[tri[k]] += g.area;
        }
    }
    acc.into_iter().zip(wsum).map(|(g, w)| g / w).collect()
}

pub fn drift_term(mesh: &ImmersedMesh, field: &CurvatureField, t: &TangentTensorField) -> Result<DriftField> {
    t.check_positive_definite()?;
    if t.vertex_values.len() != mesh.num_vertices() || field.vertices.len() != mesh.num_vertices() {
        return Err(Error::Tensor("tensor, curvature and mesh sizes differ".into()));
    }
    let grad_f = vertex_gradients(mesh, field);
    let weights = mesh.vertex_weights();
    let mut normal_part = Vec::new();
    let mut tangent_part = Vec::new();
    let mut representation = Vec::new();
    let mut norms = Vec::new();
    for (v, vc) in field.vertices.iter().enumerate() {
        let tv: &Matrix2<f64> = &t.vertex_values[v];
        let h = vc.contract(tv);
        let tan = -vc.tangent_vector(&(tv * grad_f[v]));
        let d = &h + &tan;
        norms.push(d.norm());
        representation.push(vc.to_representation(&d));
        normal_part.push(h);
        tangent_part.push(tan);
    }
    let traces = t.vertex_traces();
    let sup_norm = norms.iter().copied().fold(0.0, f64::max);
    let inf_trace = traces.iter().copied().fold(f64::INFINITY, f64::min);
    let integral_norm_sq = norms.iter().zip(weights.iter()).map(|(n, w)| n * n * w).sum();
    Ok(DriftField {
        grad_f,
        normal_part,
        tangent_part,
        representation,
        norms,
        traces,
        sup_norm,
        inf_trace,
        integral_norm_sq,
    })
}

/// Positive scalar field on the boundary curve, one value per curve edge.
#[derive(Clone, Debug)]
pub struct BoundaryScalar {
    pub edge_values: Vec<f64>,
}

impl BoundaryScalar {
    pub fn constant(curve: &BoundaryCurve, c: f64) -> Self {
        Self { edge_values: vec![c; curve.edges.len()] }
    }

    /// Average of the two edges meeting at each curve vertex.
    pub fn vertex_values(&self, curve: &BoundaryCurve) -> std::collections::BTreeMap<usize, f64> {
        let mut out = std::collections::BTreeMap::new();
        for (e, &(a, b)) in curve.edges.iter().enumerate() {
            *out.entry(a).or_insert(0.0) += 0.5 * self.edge_values[e];
            *out.entry(b).or_insert(0.0) += 0.5 * self.edge_values[e];
        }
        out
    }
}

/// `H_S − S∇̃f` along the boundary curve.
#[derive(Clone, Debug)]
pub struct BoundaryDrift {
    pub vertices: Vec<usize>,
    /// Curvature vector of the curve in the ambient, representation coordinates.
    pub curvature: Vec<DVector<f64>>,
    pub representation: Vec<DVector<f64>>,
    pub norms: Vec<f64>,
    /// `tr S`, which for a curve is the scalar itself.
    pub traces: Vec<f64>,
    pub sup_norm: f64,
    pub inf_trace: f64,
    /// `∫_M ‖H_S − S∇̃f‖² μ̃_f` with lumped boundary weights.
    pub integral_norm_sq: f64,
}

pub fn boundary_drift(
    mesh: &ImmersedMesh,
    curve: &BoundaryCurve,
    field: &CurvatureField,
    s: &BoundaryScalar,
) -> Result<BoundaryDrift> {
    if s.edge_values.len() != curve.edges.len() {
        return Err(Error::Tensor("boundary scalar must have one value per boundary edge".into()));
    }
    if let Some(bad) = s.edge_values.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::Tensor(format!("boundary tensor S must be positive, found {bad}")));
    }
    let space = mesh.space();
    let verts = mesh.vertices();
    let f = mesh.density();
    let svals = s.vertex_values(curve);
    let weights = mesh.boundary_vertex_weights();
    let mut out = BoundaryDrift {
        vertices: Vec::new(),
        curvature: Vec::new(),
        representation: Vec::new(),
        norms: Vec::new(),
        traces: Vec::new(),
        sup_norm: 0.0,
        inf_trace: f64::INFINITY,
        integral_norm_sq: 0.0,
    };
    for (v, (prev, next)) in curve.neighbours() {
        let vc = &field.vertices[v];
        let local = |w: usize| -> Result<DVector<f64>> {
            let l = space.log_unchecked(&verts[v], &verts[w])?;
            Ok(space.tangent_coords(&vc.ambient_basis, &l))
        };
        let (qa, qb) = (local(prev)?, local(next)?);
        let (aa, ab, bb) = (qa.dot(&qa), qa.dot(&qb), qb.dot(&qb));
        let det = aa * bb - ab * ab;
        let kappa = if det > 1e-14 * aa * bb {
            let alpha = 0.5 * (aa * bb - bb * ab) / det;
            let beta = 0.5 * (aa * bb - aa * ab) / det;
            let c = &qa * alpha + &qb * beta;
            &c / c.norm_squared()
        } else {
            DVector::zeros(qa.len())
        };
        let chord = &qb - &qa;
        let tau = chord.normalize();
        let dfds = (f[next] - f[prev]) / (qa.norm() + qb.norm());
        let sv = svals[&v];
        let d = (&kappa - &tau * dfds) * sv;
        let n = d.norm();
        out.sup_norm = out.sup_norm.max(n);
        out.inf_trace = out.inf_trace.min(sv);
        out.integral_norm_sq += n * n * weights[v];
        out.vertices.push(v);
        out.curvature.push(vc.to_representation(&kappa));
        out.representation.push(vc.to_representation(&d));
        out.norms.push(n);
        out.traces.push(sv);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::second_fundamental_form;
    use crate::mesh::{boundary_complex, generate_shape, DensityPreset, ShapeKind, ShapeSpec};

    fn unit_sphere(k: u32, density: DensityPreset) -> ImmersedMesh {
        generate_shape(&ShapeSpec::new(ShapeKind::RoundSphere { radius: 1.0, center: vec![] }, k).with_density(density))
            .unwrap()
    }

    #[test]
    fn zero_density_drift_is_mean_curvature() {
        let m = unit_sphere(2, DensityPreset::Zero);
        let c = second_fundamental_form(&m).unwrap();
        let d = drift_term(&m, &c, &TangentTensorField::identity(&m)).unwrap();
        for v in 0..m.num_vertices() {
            assert_eq!(d.tangent_part[v].norm(), 0.0);
            assert!((&d.normal_part[v] - c.vertices[v].mean_vector() * 2.0).norm() < 1e-14);
        }
    }

    #[test]
    fn radial_density_has_no_tangential_gradient() {
        let m = unit_sphere(2, DensityPreset::Quadratic { a: 0.5 });
        let c = second_fundamental_form(&m).unwrap();
        let d = drift_term(&m, &c, &TangentTensorField::identity(&m)).unwrap();
        assert!(d.tangent_part.iter().all(|t| t.norm() < 1e-12));
    }

    #[test]
    fn height_density_is_pythagorean() {
        let m = unit_sphere(4, DensityPreset::Linear { a: vec![0.0, 0.0, 1.0] });
        let c = second_fundamental_form(&m).unwrap();
        let d = drift_term(&m, &c, &TangentTensorField::identity(&m)).unwrap();
        for (v, x) in m.vertices().iter().enumerate() {
            let grad_sq = 1.0 - x[2] * x[2];
            let g = d.grad_f[v].norm_squared();
            assert!((g - grad_sq).abs() < 1e-2, "{g} vs {grad_sq}");
            let hn = d.normal_part[v].norm_squared();
            assert!((d.norms[v].powi(2) - (hn + g)).abs() < 1e-10);
            assert!(d.normal_part[v].dot(&d.tangent_part[v]).abs() < 1e-10);
            assert!((d.norms[v].powi(2) - (4.0 + grad_sq)).abs() < 0.05);
        }
    }

    #[test]
    fn unit_disk_boundary_curvature() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::FlatDisk { radius: 1.0 }, 3)).unwrap();
        let curve = boundary_complex(&m).unwrap();
        let c = second_fundamental_form(&m).unwrap();
        let d = boundary_drift(&m, &curve, &c, &BoundaryScalar::constant(&curve, 1.0)).unwrap();
        for (i, &v) in d.vertices.iter().enumerate() {
            assert!((d.norms[i] - 1.0).abs() < 1e-3);
            assert!(d.curvature[i].dot(&m.vertices()[v]) < 0.0);
        }
    }
}
