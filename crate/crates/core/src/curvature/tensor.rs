use std::fmt::Write as _;

use nalgebra::{Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::CurvatureField;
use crate::error::{Error, Result};
use crate::mesh::ImmersedMesh;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TensorKind {
    ScaledIdentity { c: f64 },
    Newton { r: usize },
    File { path: String },
}

impl TensorKind {
    pub fn label(&self) -> String {
        match self {
            TensorKind::ScaledIdentity { c } if *c == 1.0 => "identity".into(),
            TensorKind::ScaledIdentity { c } => format!("scaled_identity({c})"),
            TensorKind::Newton { r } => format!("newton({r})"),
            TensorKind::File { path } => format!("file({path})"),
        }
    }
}

/// A symmetric operator on the tangent planes.
///
/// Stored per triangle in the triangle frame (the planar layout frame) and
/// per vertex in the curvature tangent frame.
#[derive(Clone, Debug)]
pub struct TangentTensorField {
    pub kind: TensorKind,
    pub triangle_values: Vec<Matrix2<f64>>,
    pub vertex_values: Vec<Matrix2<f64>>,
    /// Divergence-free by construction (builtins); unchecked for files.
    pub divergence_free: bool,
}

impl TangentTensorField {
    pub fn scaled_identity(mesh: &ImmersedMesh, c: f64) -> Self {
        let id = Matrix2::identity() * c;
        Self {
            kind: TensorKind::ScaledIdentity { c },
            triangle_values: vec![id; mesh.triangles().len()],
            vertex_values: vec![id; mesh.num_vertices()],
            divergence_free: true,
        }
    }

    pub fn identity(mesh: &ImmersedMesh) -> Self {
        Self::scaled_identity(mesh, 1.0)
    }

    /// Newton tensor `T_0 = I`, `T_1 = (tr A) I − A`.
    pub fn newton(mesh: &ImmersedMesh, field: &CurvatureField, r: usize) -> Result<Self> {
        if field.codimension != 1 {
            return Err(Error::Tensor(format!("Newton tensors need codimension 1, have {}", field.codimension)));
        }
        let vertex_values: Vec<Matrix2<f64>> = match r {
            0 => vec![Matrix2::identity(); mesh.num_vertices()],
            1 => field
                .vertices
                .iter()
                .map(|c| {
                    let a = c.shape_operator.expect("codimension one");
                    Matrix2::identity() * a.trace() - a
                })
                .collect(),
            _ => return Err(Error::Tensor(format!("Newton tensor T_{r} undefined for n = 2"))),
        };
        let triangle_values = mesh
            .triangles()
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                let mut acc = Matrix2::zeros();
                for k in 0..3 {
                    acc += field.vertex_to_triangle(t, k, &vertex_values[tri[k]]);
                }
                acc / 3.0
            })
            .collect();
        Ok(Self { kind: TensorKind::Newton { r }, triangle_values, vertex_values, divergence_free: true })
    }

    /// Build from triangle-frame values; vertex values are area-weighted
    /// averages of the transferred triangle values.
    pub fn from_triangle_values(
        mesh: &ImmersedMesh,
        field: &CurvatureField,
        values: Vec<Matrix2<f64>>,
        kind: TensorKind,
    ) -> Result<Self> {
        if values.len() != mesh.triangles().len() {
            return Err(Error::Tensor(format!(
                "{} tensor values for {} triangles",
                values.len(),
                mesh.triangles().len()
            )));
        }
        let mut acc = vec![Matrix2::zeros(); mesh.num_vertices()];
        let mut wsum = vec![0.0; mesh.num_vertices()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let a = mesh.geometry()[t].area;
            for k in 0..3 {
                acc[tri[k]] += field.triangle_to_vertex(t, k, &values[t]) * a;
                wsum[tri[k]] += a;
            }
        }
        let vertex_values = acc.into_iter().zip(wsum).map(|(m, w)| m / w).collect();
        Ok(Self { kind, triangle_values: values, vertex_values, divergence_free: false })
    }

    pub fn vertex_traces(&self) -> Vec<f64> {
        self.vertex_values.iter().map(Matrix2::trace).collect()
    }

    /// Reject asymmetric or non-positive-definite values.
    pub fn check_positive_definite(&self) -> Result<()> {
        let all = self.triangle_values.iter().enumerate().map(|(i, m)| ("triangle", i, m));
        let verts = self.vertex_values.iter().enumerate().map(|(i, m)| ("vertex", i, m));
        for (what, i, m) in all.chain(verts) {
            if (m - m.transpose()).norm() >= 1e-12 {
                return Err(Error::Tensor(format!("{} is not symmetric at {what} {i}", self.kind.label())));
            }
            let min = SymmetricEigen::new(*m).eigenvalues.min();
            if !(min > 0.0) {
                return Err(Error::Tensor(format!(
                    "{} is not positive definite at {what} {i} (eigenvalue {min:e})",
                    self.kind.label()
                )));
            }
        }
        Ok(())
    }
}

/// Parse per-triangle rows `t a11 a12 a22`; every triangle must appear once.
pub fn parse_tensor_file(text: &str, num_triangles: usize) -> Result<Vec<Matrix2<f64>>> {
    let mut out: Vec<Option<Matrix2<f64>>> = vec![None; num_triangles];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(err("expected `t a11 a12 a22`".into()));
        }
        let t: usize = parts[0].parse().map_err(|_| err("bad triangle index".into()))?;
        let vals: Vec<f64> = parts[1..]
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err("tensor entries must be decimals".into()))?;
        if t >= num_triangles {
            return Err(err(format!("triangle {t} out of range")));
        }
        if out[t].is_some() {
            return Err(err(format!("triangle {t} listed twice")));
        }
        out[t] = Some(Matrix2::new(vals[0], vals[1], vals[1], vals[2]));
    }
    out.into_iter()
        .enumerate()
        .map(|(t, m)| m.ok_or_else(|| Error::Tensor(format!("triangle {t} missing from tensor file"))))
        .collect()
}

pub fn write_tensor_file(values: &[Matrix2<f64>]) -> String {
    let mut s = String::from("# t a11 a12 a22 (triangle frame: axis 1 along v0->v1, axis 2 toward v2)\n");
    for (t, m) in values.iter().enumerate() {
        let _ = writeln!(s, "{t} {} {} {}", m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::second_fundamental_form;
    use crate::mesh::{generate_shape, ShapeKind, ShapeSpec};

    #[test]
    fn newton_tensors_on_unit_sphere() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::RoundSphere { radius: 1.0, center: vec![] }, 4)).unwrap();
        let c = second_fundamental_form(&m).unwrap();
        let t0 = TangentTensorField::newton(&m, &c, 0).unwrap();
        assert!(t0.vertex_traces().iter().all(|&t| t == 2.0));
        let t1 = TangentTensorField::newton(&m, &c, 1).unwrap();
        t1.check_positive_definite().unwrap();
        for (v, vc) in c.vertices.iter().enumerate() {
            let k = vc.principal_curvatures().unwrap();
            assert!((t1.vertex_traces()[v] - (k[0] + k[1])).abs() < 1e-10);
            assert!((t1.vertex_values[v] - Matrix2::identity()).norm() < 2e-2);
            let ht = vc.contract(&t1.vertex_values[v]);
            assert!((ht.norm() - 2.0).abs() < 4e-2);
        }
        assert!(TangentTensorField::newton(&m, &c, 2).is_err());
    }

    #[test]
    fn identity_round_trips_through_triangles() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::Hemisphere, 1)).unwrap();
        let c = second_fundamental_form(&m).unwrap();
        let t = TangentTensorField::from_triangle_values(
            &m,
            &c,
            vec![Matrix2::identity() * 2.0; m.triangles().len()],
            TensorKind::ScaledIdentity { c: 2.0 },
        )
        .unwrap();
        for v in &t.vertex_values {
            assert!((v - Matrix2::identity() * 2.0).norm() < 1e-12);
        }
    }

    #[test]
    fn tensor_file_round_trip_and_errors() {
        let vals = vec![Matrix2::new(1.0, 0.25, 0.25, 2.0), Matrix2::identity()];
        assert_eq!(parse_tensor_file(&write_tensor_file(&vals), 2).unwrap(), vals);
        assert!(parse_tensor_file("0 1 0 1\n", 2).is_err());
        assert!(matches!(parse_tensor_file("0 1 0\n", 1), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn indefinite_is_rejected() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::RoundSphere { radius: 1.0, center: vec![] }, 0)).unwrap();
        let mut t = TangentTensorField::identity(&m);
        t.vertex_values[3] = Matrix2::new(1.0, 0.0, 0.0, -1.0);
        assert!(matches!(t.check_positive_definite(), Err(Error::Tensor(_))));
    }
}
