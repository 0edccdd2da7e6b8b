//! Right-hand sides of the eigenvalue bounds, the integral checks behind
//! them, and the reports comparing both sides.
//!
//! Conventions: sup/inf over a manifold are max/min over vertex values;
//! integrals use lumped vertex weights (row sums of the mass matrices);
//! `H_T = tr(T∘B)` so that `H_Id = n·H`.

mod center;
mod classical;
mod identities;
mod report;
mod theorems;

use nalgebra::{DVector, Vector2};
use serde_json::Value;

pub use center::{center_of_mass, enclosing_radius, CenterOfMass, COM_MAX_ITERATIONS, COM_TOLERANCE};
pub use classical::{classical_bounds, ClosedInputs};
pub use identities::{boundary_identity_checks, grosjean_check, identity_checks};
pub use report::{
    bound_status, BoundId, BoundReport, Domain, Hypothesis, IdentityId, IdentityReport, Metadata, Status,
    Tolerances,
};
pub use theorems::{bound_thm1, bound_thm2, bound_thm3, BoundaryInputs};

use crate::curvature::{CurvatureField, TangentTensorField, TensorKind};
use crate::error::Result;
use crate::mesh::ImmersedMesh;
use crate::spaceform::{profile_unchecked, Point};

/// Radial quantities about a base point at every vertex of a surface.
pub(crate) struct SurfaceRadial {
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub c: Vec<f64>,
    /// Normal coordinates `x_i` of each vertex about the base point.
    pub coords: Vec<DVector<f64>>,
    /// `X = s_δ(r)∇̄r` in the local ambient coordinates of each vertex.
    pub x_local: Vec<DVector<f64>>,
    /// `X^⊤` in the tangent frame of each vertex.
    pub x_tan: Vec<Vector2<f64>>,
}

pub(crate) fn surface_radial(mesh: &ImmersedMesh, field: &CurvatureField, p: &Point) -> Result<SurfaceRadial> {
    let space = mesh.space();
    let frame = space.radial_frame(p, mesh.vertices())?;
    let mut out = SurfaceRadial {
        r: frame.r.clone(),
        s: Vec::new(),
        c: Vec::new(),
        coords: frame.normal_coords,
        x_local: Vec::new(),
        x_tan: Vec::new(),
    };
    for (v, x) in frame.x_field.iter().enumerate() {
        let (s, c) = profile_unchecked(space.delta, frame.r[v]);
        let vc = &field.vertices[v];
        let local = space.tangent_coords(&vc.ambient_basis, x);
        let tan = vc.tangent.transpose() * &local;
        out.s.push(s);
        out.c.push(c);
        out.x_local.push(local);
        out.x_tan.push(Vector2::new(tan[0], tan[1]));
    }
    Ok(out)
}

pub(crate) fn integrate(values: impl IntoIterator<Item = f64>, weights: &DVector<f64>) -> f64 {
    values.into_iter().zip(weights.iter()).map(|(v, w)| v * w).sum()
}

pub(crate) fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn min_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::INFINITY, f64::min)
}

pub(crate) fn meta(pairs: Vec<(&str, Value)>) -> Metadata {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

pub(crate) fn positive_definite(t: &TangentTensorField, name: &str) -> Hypothesis {
    match t.check_positive_definite() {
        Ok(()) => Hypothesis::new(&format!("{name}_positive_definite"), true, t.kind.label()),
        Err(e) => Hypothesis::new(&format!("{name}_positive_definite"), false, e.to_string()),
    }
}

pub(crate) fn divergence_free(t: &TangentTensorField, name: &str) -> Hypothesis {
    let detail = if t.divergence_free {
        format!("{} is divergence-free by construction", t.kind.label())
    } else {
        format!("{} is not known to be divergence-free", t.kind.label())
    };
    Hypothesis::new(&format!("{name}_divergence_free"), t.divergence_free, detail)
}

pub(crate) fn is_plain_identity(t: &TangentTensorField) -> bool {
    matches!(t.kind, TensorKind::ScaledIdentity { c } if c == 1.0)
}

pub(crate) fn closed(mesh: &ImmersedMesh, want: bool) -> Hypothesis {
    let detail = format!("{} boundary edges", mesh.boundary_edges().len());
    if want {
        Hypothesis::new("closed", mesh.is_closed(), detail)
    } else {
        Hypothesis::new("nonempty_boundary", !mesh.is_closed(), detail)
    }
}
