use std::f64::consts::PI;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::ImmersedMesh;
use crate::spaceform::{sinc_profile, ModelKind, Point};

pub const COM_TOLERANCE: f64 = 1e-10;
pub const COM_MAX_ITERATIONS: usize = 200;

#[derive(Clone, Debug, Serialize)]
pub struct CenterOfMass {
    pub point: Vec<f64>,
    pub iterations: usize,
    /// `‖∫ (s_δ(r)/r) x_i dμ‖ / (V·diam)` at the returned point.
    pub defect: f64,
    /// Largest distance from the point to a vertex carrying weight.
    pub support_radius: f64,
    /// For δ > 0: whether the support lies in the ball of radius `π/(4√δ)`.
    pub within_quarter_ball: bool,
}

impl CenterOfMass {
    pub fn point(&self) -> Point {
        DVector::from_column_slice(&self.point)
    }
}

/// Weighted center of mass: the zero of `∫ (s_δ(r)/r) log_p(x) dμ`.
///
/// `weights` holds one lumped weight per vertex; vertices with zero weight
/// do not contribute, so boundary weights give the center of the boundary.
pub fn center_of_mass(mesh: &ImmersedMesh, weights: &DVector<f64>) -> Result<CenterOfMass> {
    let space = mesh.space();
    let verts = mesh.vertices();
    if weights.len() != verts.len() {
        return Err(Error::CenterOfMass("one weight per vertex required".into()));
    }
    let support: Vec<usize> = (0..verts.len()).filter(|&v| weights[v] > 0.0).collect();
    let total: f64 = support.iter().map(|&v| weights[v]).sum();
    if support.is_empty() || !(total > 0.0) {
        return Err(Error::CenterOfMass("total weight is zero".into()));
    }
    let mut mean = DVector::zeros(space.repr_dim());
    for &v in &support {
        mean.axpy(weights[v] / total, &verts[v], 1.0);
    }
    let mut p = match space.kind() {
        ModelKind::Euclidean => mean,
        ModelKind::Sphere if mean.norm() < 1e-12 => {
            return Err(Error::CenterOfMass("extrinsic mean is at the origin of the sphere model".into()))
        }
        _ => space.project(&mean),
    };
    let diam = 2.0 * support.iter().map(|&v| space.distance_unchecked(&p, &verts[v])).fold(0.0, f64::max);
    let scale = total * diam.max(f64::MIN_POSITIVE);
    for iteration in 0..=COM_MAX_ITERATIONS {
        let mut step = DVector::zeros(space.repr_dim());
        for &v in &support {
            let r = space.distance_unchecked(&p, &verts[v]);
            let log = space.log_unchecked(&p, &verts[v])?;
            step.axpy(weights[v] * sinc_profile(space.delta, r), &log, 1.0);
        }
        let defect = space.tangent_norm(&step) / scale;
        if defect < COM_TOLERANCE {
            let support_radius =
                support.iter().map(|&v| space.distance_unchecked(&p, &verts[v])).fold(0.0, f64::max);
            let within_quarter_ball = space.delta <= 0.0 || support_radius < PI / (4.0 * space.delta.sqrt());
            return Ok(CenterOfMass {
                point: p.iter().copied().collect(),
                iterations: iteration,
                defect,
                support_radius,
                within_quarter_ball,
            });
        }
        if iteration == COM_MAX_ITERATIONS {
            return Err(Error::CenterOfMass(format!(
                "no convergence after {COM_MAX_ITERATIONS} iterations (defect {defect:e})"
            )));
        }
        p = space.exp_unchecked(&p, &(step / total));
    }
    unreachable!()
}

/// Largest geodesic distance from `p` to a vertex of the mesh.
pub fn enclosing_radius(mesh: &ImmersedMesh, p: &Point) -> Result<f64> {
    let space = mesh.space();
    space.check_point(p)?;
    Ok(mesh.vertices().iter().map(|v| space.distance_unchecked(p, v)).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_shape, DensityPreset, ShapeKind, ShapeSpec};

    fn sphere(center: Vec<f64>, density: DensityPreset) -> ImmersedMesh {
        generate_shape(&ShapeSpec::new(ShapeKind::RoundSphere { radius: 1.0, center }, 3).with_density(density))
            .unwrap()
    }

    #[test]
    fn centered_and_translated_spheres() {
        let m = sphere(vec![], DensityPreset::Zero);
        let c = center_of_mass(&m, &m.vertex_weights()).unwrap();
        assert!(c.point().norm() < 1e-8 && c.defect < COM_TOLERANCE);
        assert!((enclosing_radius(&m, &c.point()).unwrap() - 1.0).abs() < 1e-8);
        let m = sphere(vec![0.3, -0.2, 0.5], DensityPreset::Zero);
        let c = center_of_mass(&m, &m.vertex_weights()).unwrap();
        let expect = DVector::from_column_slice(&[0.3, -0.2, 0.5]);
        assert!((c.point() - expect).norm() < 1e-8);
    }

    #[test]
    fn tilted_density_center_matches_axis_bisection() {
        let m = sphere(vec![], DensityPreset::Linear { a: vec![0.0, 0.0, 1.0] });
        let w = m.vertex_weights();
        let c = center_of_mass(&m, &w).unwrap();
        assert!(c.defect < COM_TOLERANCE);
        assert!(c.point[0].abs() < 1e-8 && c.point[1].abs() < 1e-8);
        // Independent oracle: the axial defect `Σ w (x₃ − z)` vanishes at the weighted mean height.
        let axial = |z: f64| -> f64 { m.vertices().iter().zip(w.iter()).map(|(x, w)| w * (x[2] - z)).sum() };
        let (mut lo, mut hi) = (-1.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if axial(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!(c.point[2] < 0.0);
        assert!((c.point[2] - 0.5 * (lo + hi)).abs() < 1e-8);
    }

    #[test]
    fn geodesic_spheres_center_at_pole() {
        for (kind, delta) in [
            (ShapeKind::GeodesicSphereS3 { rho: std::f64::consts::PI / 6.0, delta: 1.0 }, 1.0f64),
            (ShapeKind::GeodesicSphereH3 { rho: 0.5, delta: -1.0 }, -1.0),
        ] {
            let m = generate_shape(&ShapeSpec::new(kind, 2)).unwrap();
            let c = center_of_mass(&m, &m.vertex_weights()).unwrap();
            let mut pole = DVector::zeros(4);
            pole[0] = 1.0 / delta.abs().sqrt();
            assert!((c.point() - pole).norm() < 1e-8, "{:?}", c.point);
            assert!(c.within_quarter_ball);
        }
    }

    #[test]
    fn boundary_weights_center_the_equator() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::Hemisphere, 2)).unwrap();
        let c = center_of_mass(&m, &m.boundary_vertex_weights()).unwrap();
        assert!(c.point().norm() < 1e-8);
        assert!((enclosing_radius(&m, &c.point()).unwrap() - 1.0).abs() < 1e-12);
        let d = generate_shape(&ShapeSpec::new(ShapeKind::FlatDisk { radius: 1.5 }, 2)).unwrap();
        let c = center_of_mass(&d, &d.vertex_weights()).unwrap();
        assert!((enclosing_radius(&d, &c.point()).unwrap() - 1.5).abs() < 1e-8);
    }
}
