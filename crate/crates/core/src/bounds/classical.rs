use serde_json::json;

use super::{
    closed, divergence_free, integrate, max_of, meta, positive_definite, BoundId, BoundReport, Hypothesis, Tolerances,
};
use crate::curvature::{drift_term, CurvatureField, TangentTensorField};
use crate::error::Result;
use crate::mesh::ImmersedMesh;

/// A closed surface with its curvature and the tensors `T` (operator) and `S`.
pub struct ClosedInputs<'a> {
    pub mesh: &'a ImmersedMesh,
    pub field: &'a CurvatureField,
    pub t: &'a TangentTensorField,
    pub s: &'a TangentTensorField,
}

fn delta_is(delta: f64, want: f64) -> Hypothesis {
    Hypothesis::new("ambient_curvature", delta == want, format!("delta = {delta}, required {want}"))
}

fn codimension_one(field: &CurvatureField) -> Hypothesis {
    Hypothesis::new("codimension_one", field.codimension == 1, format!("codimension {}", field.codimension))
}

/// Classical bounds on the first Laplace eigenvalue (`laplace_lambda`) and
/// the general weighted bound on the first eigenvalue of `L_{T,f}`
/// (`operator_lambda`).
pub fn classical_bounds(
    inp: &ClosedInputs,
    laplace_lambda: f64,
    operator_lambda: f64,
    tol: &Tolerances,
) -> Result<Vec<BoundReport>> {
    let (mesh, field) = (inp.mesh, inp.field);
    let delta = mesh.space().delta;
    let n = mesh.intrinsic_dim() as f64;
    let area = mesh.vertex_areas();
    let volume = area.sum();
    let h_norm = field.mean_norms();
    let h_sq_int = integrate(h_norm.iter().map(|h| h * h), &area);
    let base = |extra: Vec<(&str, serde_json::Value)>| {
        let mut m = meta(vec![("volume", json!(volume)), ("integral_mean_curvature_sq", json!(h_sq_int))]);
        m.extend(meta(extra));
        m
    };
    let mut out = Vec::new();

    let codim1 = field.codimension == 1;
    let h_r = |r: usize| -> Result<Vec<f64>> { if codim1 { field.h_r(r) } else { Ok(vec![0.0; mesh.num_vertices()]) } };
    let h1 = h_r(1)?;
    let h1_sq = integrate(h1.iter().map(|h| h * h), &area);
    out.push(BoundReport::new(
        BoundId::Reilly11,
        None,
        laplace_lambda,
        n / volume * h1_sq,
        vec![closed(mesh, true), codimension_one(field), delta_is(delta, 0.0)],
        base(vec![("integral_h1_sq", json!(h1_sq))]),
        tol,
    ));
    for r in 1..=mesh.intrinsic_dim() {
        let lower = integrate(h_r(r - 1)?, &area);
        let upper = integrate(h_r(r)?.iter().map(|h| h * h), &area);
        let rhs = n * volume * upper / (lower * lower);
        out.push(BoundReport::new(
            BoundId::Reilly12,
            Some(format!("r={r}")),
            laplace_lambda,
            rhs,
            vec![closed(mesh, true), codimension_one(field), delta_is(delta, 0.0)],
            base(vec![
                ("r", json!(r)),
                ("integral_h_r_minus_1", json!(lower)),
                ("integral_h_r_sq", json!(upper)),
                ("rhs_without_dimension_factor", json!(rhs / n)),
            ]),
            tol,
        ));
    }
    out.push(BoundReport::new(
        BoundId::Reilly13,
        None,
        laplace_lambda,
        n / volume * h_sq_int,
        vec![closed(mesh, true), delta_is(delta, 0.0)],
        base(vec![]),
        tol,
    ));
    out.push(BoundReport::new(
        BoundId::ReillySphere14,
        None,
        laplace_lambda,
        n / volume * (h_sq_int + volume),
        vec![closed(mesh, true), delta_is(delta, 1.0)],
        base(vec![]),
        tol,
    ));
    out.push(BoundReport::new(
        BoundId::ReillyHyp15,
        None,
        laplace_lambda,
        n / volume * (h_sq_int - volume),
        vec![closed(mesh, true), delta_is(delta, -1.0)],
        base(vec![]),
        tol,
    ));
    let h_sup = max_of(h_norm.iter().copied());
    out.push(BoundReport::new(
        BoundId::Heintze16,
        None,
        laplace_lambda,
        n * (h_sup * h_sup + delta),
        vec![closed(mesh, true)],
        base(vec![("sup_mean_curvature", json!(h_sup)), ("delta", json!(delta))]),
        tol,
    ));

    let weights = mesh.vertex_weights();
    let volume_f = weights.sum();
    let ds = drift_term(mesh, field, inp.s)?;
    let tr_t = integrate(inp.t.vertex_traces(), &weights);
    let tr_s = integrate(inp.s.vertex_traces(), &weights);
    let h_s_sq = integrate(ds.normal_part.iter().map(|h| h.norm_squared()), &weights);
    let s_grad_sq = integrate(ds.tangent_part.iter().map(|t| t.norm_squared()), &weights);
    out.push(BoundReport::new(
        BoundId::General17,
        None,
        operator_lambda,
        tr_t * (h_s_sq + s_grad_sq) / (tr_s * tr_s),
        vec![
            closed(mesh, true),
            delta_is(delta, 0.0),
            positive_definite(inp.t, "T"),
            divergence_free(inp.t, "T"),
            divergence_free(inp.s, "S"),
        ],
        meta(vec![
            ("volume_f", json!(volume_f)),
            ("integral_trace_t", json!(tr_t)),
            ("integral_trace_s", json!(tr_s)),
            ("integral_h_s_sq", json!(h_s_sq)),
            ("integral_s_grad_f_sq", json!(s_grad_sq)),
            ("tensor_t", json!(inp.t.kind.label())),
            ("tensor_s", json!(inp.s.kind.label())),
        ]),
        tol,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::Status;
    use crate::curvature::second_fundamental_form;
    use crate::mesh::{generate_shape, ShapeKind, ShapeSpec};

    fn reports(m: &ImmersedMesh, lambda: f64) -> Vec<BoundReport> {
        let c = second_fundamental_form(m).unwrap();
        let id = TangentTensorField::identity(m);
        let inp = ClosedInputs { mesh: m, field: &c, t: &id, s: &id };
        classical_bounds(&inp, lambda, lambda, &Tolerances::default()).unwrap()
    }

    fn find(r: &[BoundReport], id: BoundId, variant: Option<&str>) -> BoundReport {
        r.iter().find(|b| b.bound_id == id && b.variant.as_deref() == variant).unwrap().clone()
    }

    #[test]
    fn unit_sphere_equality_values() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::RoundSphere { radius: 1.0, center: vec![] }, 4)).unwrap();
        let r = reports(&m, 2.0);
        for (id, v) in [(BoundId::Reilly11, None), (BoundId::Reilly12, Some("r=1")), (BoundId::Reilly12, Some("r=2"))] {
            let b = find(&r, id, v);
            assert!((b.rhs - 2.0).abs() < 0.04, "{id:?} {v:?}: {}", b.rhs);
            assert_eq!(b.status, Status::EqualityWithinTol);
        }
        let g = find(&r, BoundId::General17, None);
        let c = find(&r, BoundId::Reilly13, None);
        assert!((g.rhs - c.rhs).abs() < 1e-10 * c.rhs);
        assert_eq!(find(&r, BoundId::ReillySphere14, None).status, Status::HypothesesUnmet);
        assert_eq!(find(&r, BoundId::ReillyHyp15, None).status, Status::HypothesesUnmet);
    }

    #[test]
    fn scale_covariance_of_reilly_rhs() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::Ellipsoid { a: 1.0, b: 1.0, c: 1.5 }, 2)).unwrap();
        let base = find(&reports(&m, 1.0), BoundId::Reilly11, None);
        for s in [0.5, 2.0] {
            let ms = m.scaled(s).unwrap();
            let b = find(&reports(&ms, 1.0 / (s * s)), BoundId::Reilly11, None);
            assert!((b.rhs * s * s - base.rhs).abs() < 1e-9 * base.rhs);
            assert_eq!(b.slack.signum(), base.slack.signum());
        }
    }
}
