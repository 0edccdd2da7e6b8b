//! P1 finite-element matrices for the weighted bilinear forms
//! `∫⟨T∇u,∇v⟩e^{−f}`, `∫uv e^{−f}` and their boundary counterparts.

use crate::curvature::{BoundaryScalar, TangentTensorField};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{BoundaryCurve, ImmersedMesh, GAUSS2};

#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub boundary_mass: Option<CsrMatrix>,
    pub boundary_stiffness: Option<CsrMatrix>,
    /// Boundary vertex indices in ascending order (empty for closed meshes).
    pub boundary_dofs: Vec<usize>,
    /// Interior vertex indices in ascending order.
    pub interior_dofs: Vec<usize>,
}

impl AssembledSystem {
    pub fn dim(&self) -> usize {
        self.mass.dim()
    }

    /// Coordinate-format dump of one matrix (`row col value`, 0-based).
    pub fn dump(matrix: &CsrMatrix) -> String {
        matrix.to_coo_text()
    }
}

pub fn assemble_stiffness(mesh: &ImmersedMesh, t: &TangentTensorField) -> Result<CsrMatrix> {
    if t.triangle_values.len() != mesh.triangles().len() {
        return Err(Error::Tensor("tensor field does not match the mesh".into()));
    }
    let mut b = TripletBuilder::new(mesh.num_vertices());
    for (e, tri) in mesh.triangles().iter().enumerate() {
        let g = &mesh.geometry()[e];
        let w = g.area / 3.0 * mesh.midpoint_weights(e).iter().sum::<f64>();
        let tm = &t.triangle_values[e];
        for i in 0..3 {
            let tg = [
                tm[(0, 0)] * g.grads[i][0] + tm[(0, 1)] * g.grads[i][1],
                tm[(1, 0)] * g.grads[i][0] + tm[(1, 1)] * g.grads[i][1],
            ];
            for j in 0..3 {
                let val = tg[0] * g.grads[j][0] + tg[1] * g.grads[j][1];
                b.add(tri[i], tri[j], val * w);
            }
        }
    }
    Ok(symmetrize(b.build()))
}

pub fn assemble_mass(mesh: &ImmersedMesh) -> CsrMatrix {
    let mut b = TripletBuilder::new(mesh.num_vertices());
    for (e, tri) in mesh.triangles().iter().enumerate() {
        let a3 = mesh.geometry()[e].area / 3.0;
        // Midpoint m_k lies on edge (k, k+1), where φ_k = φ_{k+1} = 1/2.
        let m = mesh.midpoint_weights(e);
        for i in 0..3 {
            for j in 0..3 {
                let mut val = 0.0;
                for (k, wk) in m.iter().enumerate() {
                    let phi = |a: usize| if a == k || a == (k + 1) % 3 { 0.5 } else { 0.0 };
                    val += wk * phi(i) * phi(j);
                }
                b.add(tri[i], tri[j], a3 * val);
            }
        }
    }
    b.build()
}

/// Weighted boundary mass and boundary stiffness `∫ S u' v' e^{−f} ds`.
pub fn assemble_boundary(
    mesh: &ImmersedMesh,
    curve: &BoundaryCurve,
    s: &BoundaryScalar,
) -> Result<(CsrMatrix, CsrMatrix)> {
    if mesh.is_closed() {
        return Err(Error::ClosedMesh("boundary matrices need a boundary".into()));
    }
    if s.edge_values.len() != curve.edges.len() {
        return Err(Error::Tensor("boundary scalar must have one value per boundary edge".into()));
    }
    let n = mesh.num_vertices();
    let mut bm = TripletBuilder::new(n);
    let mut bk = TripletBuilder::new(n);
    for (e, &(a, b)) in curve.edges.iter().enumerate() {
        let l = curve.lengths[e];
        let w = mesh.gauss_weights(a, b);
        let idx = [a, b];
        for (q, x) in GAUSS2.iter().enumerate() {
            let phi = [1.0 - x, *x];
            for i in 0..2 {
                for j in 0..2 {
                    bm.add(idx[i], idx[j], 0.5 * l * w[q] * phi[i] * phi[j]);
                }
            }
        }
        let kw = s.edge_values[e] * 0.5 * (w[0] + w[1]) / l;
        bk.add(a, a, kw);
        bk.add(b, b, kw);
        bk.add(a, b, -kw);
        bk.add(b, a, -kw);
    }
    Ok((bm.build(), bk.build()))
}

pub fn assemble_system(
    mesh: &ImmersedMesh,
    t: &TangentTensorField,
    boundary: Option<(&BoundaryCurve, &BoundaryScalar)>,
) -> Result<AssembledSystem> {
    let stiffness = assemble_stiffness(mesh, t)?;
    let mass = assemble_mass(mesh);
    let boundary_dofs = mesh.boundary_vertices();
    let mut is_boundary = vec![false; mesh.num_vertices()];
    for &v in &boundary_dofs {
        is_boundary[v] = true;
    }
    let interior_dofs = (0..mesh.num_vertices()).filter(|&v| !is_boundary[v]).collect();
    let (boundary_mass, boundary_stiffness) = match boundary {
        Some((curve, s)) => {
            let (b, k) = assemble_boundary(mesh, curve, s)?;
            (Some(b), Some(k))
        }
        None => (None, None),
    };
    Ok(AssembledSystem { stiffness, mass, boundary_mass, boundary_stiffness, boundary_dofs, interior_dofs })
}

/// Average `A` and `Aᵀ` entrywise to remove rounding asymmetry.
fn symmetrize(a: CsrMatrix) -> CsrMatrix {
    let mut b = TripletBuilder::new(a.dim());
    for (i, j, v) in a.triplets() {
        b.add(i, j, 0.5 * v);
        b.add(j, i, 0.5 * v);
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{boundary_complex, generate_shape, ShapeKind, ShapeSpec};
    use crate::spaceform::SpaceForm;
    use nalgebra::DVector;

    fn square() -> ImmersedMesh {
        let v = |x: f64, y: f64| DVector::from_column_slice(&[x, y, 0.0]);
        ImmersedMesh::new(
            SpaceForm::euclidean(3),
            vec![v(0., 0.), v(1., 0.), v(1., 1.), v(0., 1.)],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![0.0; 4],
        )
        .unwrap()
    }

    #[test]
    fn unit_square_cotangent_stiffness() {
        let m = square();
        let k = assemble_stiffness(&m, &TangentTensorField::identity(&m)).unwrap();
        // Hand assembly: cot(45°)/2 per right-angle-free edge, cot(90°) = 0.
        let expect = [
            [1.0, -0.5, 0.0, -0.5],
            [-0.5, 1.0, -0.5, 0.0],
            [0.0, -0.5, 1.0, -0.5],
            [-0.5, 0.0, -0.5, 1.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((k.get(i, j) - expect[i][j]).abs() < 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn equilateral_mass_entries() {
        let v = |x: f64, y: f64| DVector::from_column_slice(&[x, y, 0.0]);
        let m = ImmersedMesh::new(
            SpaceForm::euclidean(3),
            vec![v(0., 0.), v(1., 0.), v(0.5, 3f64.sqrt() / 2.0)],
            vec![[0, 1, 2]],
            vec![0.0; 3],
        )
        .unwrap();
        let mm = assemble_mass(&m);
        let area = 3f64.sqrt() / 4.0;
        assert!((mm.get(0, 0) - area / 6.0).abs() < 1e-15);
        assert!((mm.get(0, 1) - area / 12.0).abs() < 1e-15);
    }

    #[test]
    fn scaling_laws() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::RoundSphere { radius: 1.0, center: vec![] }, 2)).unwrap();
        let k1 = assemble_stiffness(&m, &TangentTensorField::identity(&m)).unwrap();
        let k3 = assemble_stiffness(&m, &TangentTensorField::scaled_identity(&m, 3.0)).unwrap();
        let mc = m.with_density(vec![0.7; m.num_vertices()]).unwrap();
        let kc = assemble_stiffness(&mc, &TangentTensorField::identity(&mc)).unwrap();
        for (i, j, v) in k1.triplets() {
            assert!((k3.get(i, j) - 3.0 * v).abs() <= 1e-14 * v.abs().max(1.0));
            assert!((kc.get(i, j) - (-0.7f64).exp() * v).abs() <= 1e-14 * v.abs().max(1.0));
        }
        let mass = assemble_mass(&m);
        assert!((mass.total() - m.weighted_measures().total_volume_f).abs() < 1e-12);
        assert!(k1.max_asymmetry() < 1e-12);
        assert!(k1.row_sums().amax() < 1e-12 * k1.max_abs());
    }

    #[test]
    fn boundary_matrices_on_disk() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::FlatDisk { radius: 1.0 }, 4)).unwrap();
        let curve = boundary_complex(&m).unwrap();
        let (b, kb) = assemble_boundary(&m, &curve, &BoundaryScalar::constant(&curve, 1.0)).unwrap();
        assert!((b.total() - 2.0 * std::f64::consts::PI).abs() < 0.01 * 2.0 * std::f64::consts::PI);
        assert!(kb.row_sums().amax() < 1e-12);
        let ones = DVector::from_element(m.num_vertices(), 1.0);
        assert!(kb.mul_vec(&ones).amax() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn stiffness_is_symmetric_and_kills_constants(
            seed in 0u64..1000,
            x in proptest::collection::vec(-1.0..1.0f64, 6),
        ) {
            let m = generate_shape(
                &ShapeSpec::new(ShapeKind::Ellipsoid { a: 1.0, b: 1.3, c: 0.8 }, 1).with_jitter(seed),
            )
            .unwrap();
            let t = TangentTensorField::scaled_identity(&m, 1.5);
            let k = assemble_stiffness(&m, &t).unwrap();
            let n = m.num_vertices();
            let u = DVector::from_fn(n, |i, _| x[i % 6] * (1.0 + i as f64 / n as f64));
            let w = DVector::from_fn(n, |i, _| x[(i + 3) % 6] - 0.1 * i as f64 / n as f64);
            let (uv, vu) = (k.quad_form(&u, &w), k.quad_form(&w, &u));
            proptest::prop_assert!((uv - vu).abs() < 1e-12 * (1.0 + uv.abs()));
            proptest::prop_assert!(k.quad_form(&u, &u) >= -1e-12);
            proptest::prop_assert!(k.mul_vec(&DVector::from_element(n, 1.0)).amax() < 1e-12);
        }
    }
}
