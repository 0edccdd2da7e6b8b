use nalgebra::{DVector, Matrix2};
use proptest::prelude::*;

use reilly_verify::bounds::{grosjean_check, Domain, Tolerances};
use reilly_verify::curvature::{second_fundamental_form, TangentTensorField, TensorKind};
use reilly_verify::mesh::{generate_shape, ShapeKind, ShapeSpec};

fn spd(a: f64, b: f64, c: f64) -> Matrix2<f64> {
    let l = Matrix2::new(a, 0.0, b, c);
    l * l.transpose() + Matrix2::identity() * 0.05
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_spd_field_satisfies_the_pointwise_inequality(
        seed in 0u64..10_000,
        entries in proptest::collection::vec((0.2..2.0f64, -1.0..1.0f64, 0.2..2.0f64), 8),
        p in proptest::collection::vec(-0.3..0.3f64, 3),
    ) {
        let mesh = generate_shape(
            &ShapeSpec::new(ShapeKind::Ellipsoid { a: 1.0, b: 1.2, c: 0.9 }, 2).with_jitter(seed),
        )
        .unwrap();
        let field = second_fundamental_form(&mesh).unwrap();
        let values = (0..mesh.triangles().len())
            .map(|k| {
                let (a, b, c) = entries[(k * 7 + seed as usize) % entries.len()];
                spd(a, b, c)
            })
            .collect();
        let kind = TensorKind::File { path: "random".into() };
        let t = TangentTensorField::from_triangle_values(&mesh, &field, values, kind).unwrap();
        let tol = Tolerances::default();
        let r = grosjean_check(&mesh, &field, &t, &DVector::from_vec(p), Domain::ClosedSurface, &tol).unwrap();
        prop_assert!(r.status.is_satisfied(), "{:?} normalized {:e}", r.status, r.normalized_residual);
        prop_assert!(r.normalized_residual.abs() < 1e-12);
    }
}

#[test]
fn geodesic_sphere_in_s3_satisfies_the_inequality() {
    let mesh = generate_shape(&ShapeSpec::new(ShapeKind::GeodesicSphereS3 { rho: 0.8, delta: 1.0 }, 3)).unwrap();
    let field = second_fundamental_form(&mesh).unwrap();
    let t = TangentTensorField::identity(&mesh);
    let p = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
    let r = grosjean_check(&mesh, &field, &t, &p, Domain::ClosedSurface, &Tolerances::default()).unwrap();
    assert!(r.status.is_satisfied(), "{:?} {:e}", r.status, r.normalized_residual);
}
