use std::f64::consts::PI;

use serde_json::json;

use super::{
    center_of_mass, closed, divergence_free, enclosing_radius, integrate, is_plain_identity, max_of, meta, min_of,
    positive_definite, BoundId, BoundReport, ClosedInputs, CenterOfMass, Hypothesis, Tolerances,
};
use crate::curvature::{boundary_drift, drift_term, BoundaryScalar, CurvatureField, TangentTensorField};
use crate::error::Result;
use crate::mesh::{BoundaryCurve, ImmersedMesh};
use crate::spaceform::profile_unchecked;

fn delta_sign(delta: f64, positive: bool) -> Hypothesis {
    let passed = if positive { delta > 0.0 } else { delta <= 0.0 };
    let want = if positive { "delta > 0" } else { "delta <= 0" };
    Hypothesis::new("ambient_curvature", passed, format!("delta = {delta}, required {want}"))
}

fn quarter_ball(delta: f64, radius: f64) -> Hypothesis {
    let limit = if delta > 0.0 { PI / (4.0 * delta.sqrt()) } else { f64::INFINITY };
    Hypothesis::new(
        "quarter_ball",
        radius < limit,
        format!("enclosing radius {radius} about the center of mass, limit pi/(4 sqrt(delta)) = {limit}"),
    )
}

fn com_json(c: &CenterOfMass) -> serde_json::Value {
    json!({"point": c.point, "iterations": c.iterations, "defect": c.defect})
}

/// THM1_CASE1 and THM1_CASE2 for the first eigenvalue `lambda` of `L_{T,f}`.
pub fn bound_thm1(inp: &ClosedInputs, lambda: f64, tol: &Tolerances) -> Result<Vec<BoundReport>> {
    let (mesh, field) = (inp.mesh, inp.field);
    let delta = mesh.space().delta;
    let weights = mesh.vertex_weights();
    let volume_f = weights.sum();
    let com = center_of_mass(mesh, &weights)?;
    let radius = enclosing_radius(mesh, &com.point())?;
    let dt = drift_term(mesh, field, inp.t)?;
    let ds = drift_term(mesh, field, inp.s)?;
    let tr_t = inp.t.vertex_traces();
    let tr_s = inp.s.vertex_traces();
    let common = |extra: Vec<(&str, serde_json::Value)>| {
        let mut m = meta(vec![
            ("center_of_mass", com_json(&com)),
            ("enclosing_radius", json!(radius)),
            ("volume_f", json!(volume_f)),
            ("sup_drift_t", json!(dt.sup_norm)),
            ("sup_drift_s", json!(ds.sup_norm)),
            ("inf_trace_t", json!(dt.inf_trace)),
            ("inf_trace_s", json!(ds.inf_trace)),
            ("tensor_t", json!(inp.t.kind.label())),
            ("tensor_s", json!(inp.s.kind.label())),
        ]);
        m.extend(meta(extra));
        m
    };
    let base_hyp = || vec![closed(mesh, true), positive_definite(inp.t, "T"), positive_definite(inp.s, "S")];

    let ratio_s = max_of(dt.norms.iter().zip(&tr_s).map(|(d, t)| d / t));
    let ratio_t = max_of(dt.norms.iter().zip(&tr_t).map(|(d, t)| d / t));
    let bracket = |k: f64| max_of((0..mesh.num_vertices()).map(|v| delta * tr_t[v] + k * ds.norms[v]));
    let rhs = bracket(ratio_s);
    let rhs_t = bracket(ratio_t);
    let mut hyp = base_hyp();
    hyp.push(delta_sign(delta, false));
    let mut case1 = BoundReport::new(
        BoundId::Thm1Case1,
        None,
        lambda,
        rhs,
        hyp,
        common(vec![
            ("sup_drift_t_over_trace_s", json!(ratio_s)),
            ("sup_drift_t_over_trace_t", json!(ratio_t)),
            ("rhs_trace_t_variant", json!(rhs_t)),
        ]),
        tol,
    );
    case1
        .metadata
        .insert("status_trace_t_variant".into(), json!(super::bound_status(lambda, rhs_t, tol).as_str()));

    let int_tr_t = integrate(tr_t.iter().copied(), &weights);
    let inf_tr_s = min_of(tr_s.iter().copied());
    let rhs2 = int_tr_t / volume_f * (delta + ds.integral_norm_sq / (volume_f * inf_tr_s * inf_tr_s));
    let mut hyp = base_hyp();
    hyp.push(delta_sign(delta, true));
    hyp.push(quarter_ball(delta, radius));
    let case2 = BoundReport::new(
        BoundId::Thm1Case2,
        None,
        lambda,
        rhs2,
        hyp,
        common(vec![
            ("integral_trace_t", json!(int_tr_t)),
            ("integral_drift_s_sq", json!(ds.integral_norm_sq)),
        ]),
        tol,
    );
    Ok(vec![case1, case2])
}

/// A surface with boundary, its boundary curve and the tensors `T` on the
/// surface and `S` (a positive scalar) on the curve.
pub struct BoundaryInputs<'a> {
    pub mesh: &'a ImmersedMesh,
    pub curve: &'a BoundaryCurve,
    pub field: &'a CurvatureField,
    pub t: &'a TangentTensorField,
    pub s: &'a BoundaryScalar,
}

/// THM2_CASE1 and THM2_CASE2 for the first Steklov eigenvalue `sigma`.
pub fn bound_thm2(inp: &BoundaryInputs, sigma: f64, tol: &Tolerances) -> Result<Vec<BoundReport>> {
    let (mesh, field) = (inp.mesh, inp.field);
    let delta = mesh.space().delta;
    let weights = mesh.vertex_weights();
    let bweights = mesh.boundary_vertex_weights();
    let (vol_omega, vol_m) = (weights.sum(), bweights.sum());
    let com = center_of_mass(mesh, &bweights)?;
    let radius = enclosing_radius(mesh, &com.point())?;
    let dt = drift_term(mesh, field, inp.t)?;
    let ds = boundary_drift(mesh, inp.curve, field, inp.s)?;
    let tr_t = inp.t.vertex_traces();
    let hyp = |positive: bool| {
        let mut h = vec![
            closed(mesh, false),
            delta_sign(delta, positive),
            positive_definite(inp.t, "T"),
            divergence_free(inp.t, "T"),
        ];
        if positive {
            h.push(quarter_ball(delta, radius));
        }
        h
    };
    let common = |extra: Vec<(&str, serde_json::Value)>| {
        let mut m = meta(vec![
            ("center_of_mass", com_json(&com)),
            ("center_of_mass_measure", json!("boundary")),
            ("enclosing_radius", json!(radius)),
            ("volume_f_domain", json!(vol_omega)),
            ("volume_f_boundary", json!(vol_m)),
            ("sup_drift_t", json!(dt.sup_norm)),
            ("sup_drift_s", json!(ds.sup_norm)),
            ("inf_trace_t", json!(dt.inf_trace)),
            ("inf_trace_s", json!(ds.inf_trace)),
            ("tensor_t", json!(inp.t.kind.label())),
        ]);
        m.extend(meta(extra));
        m
    };

    let k = max_of(dt.norms.iter().zip(&tr_t).map(|(d, t)| d / t));
    let first = max_of((0..mesh.num_vertices()).map(|v| delta * tr_t[v] + k * dt.norms[v]));
    let second = delta + ds.sup_norm * ds.sup_norm / (ds.inf_trace * ds.inf_trace);
    let (s_r, _) = profile_unchecked(delta, radius);
    let rhs1 = first * second * (vol_omega / vol_m) * s_r * s_r;
    let case1 = BoundReport::new(
        BoundId::Thm2Case1,
        None,
        sigma,
        rhs1,
        hyp(false),
        common(vec![
            ("domain_factor", json!(first)),
            ("boundary_factor", json!(second)),
            ("volume_ratio", json!(vol_omega / vol_m)),
            ("s_delta_radius_sq", json!(s_r * s_r)),
        ]),
        tol,
    );

    let int_tr_t = integrate(tr_t.iter().copied(), &weights);
    let rhs2 = int_tr_t / vol_m * (delta + ds.integral_norm_sq / (vol_m * ds.inf_trace * ds.inf_trace));
    let case2 = BoundReport::new(
        BoundId::Thm2Case2,
        None,
        sigma,
        rhs2,
        hyp(true),
        common(vec![
            ("integral_trace_t", json!(int_tr_t)),
            ("integral_drift_s_sq", json!(ds.integral_norm_sq)),
        ]),
        tol,
    );
    Ok(vec![case1, case2])
}

/// THM3_CASE1 and THM3_CASE2 for the first Wentzell eigenvalue `alpha` with parameter `b`.
///
/// The bound is unweighted with the plain Laplacian inside: `f ≢ 0` or
/// `T ≠ Id` are reported as unmet hypotheses.
pub fn bound_thm3(inp: &BoundaryInputs, alpha: f64, b: f64, tol: &Tolerances) -> Result<Vec<BoundReport>> {
    let (mesh, field) = (inp.mesh, inp.field);
    let delta = mesh.space().delta;
    let n = mesh.intrinsic_dim() as f64;
    let area = mesh.vertex_areas();
    let length = mesh.boundary_vertex_lengths();
    let (vol_omega, vol_m) = (area.sum(), length.sum());
    let com = center_of_mass(mesh, &area)?;
    let radius = enclosing_radius(mesh, &com.point())?;
    let ds = boundary_drift(mesh, inp.curve, field, inp.s)?;
    // `H_S = S κ`; the density term does not enter this bound.
    let h_s: Vec<f64> = ds.curvature.iter().zip(&ds.traces).map(|(k, s)| s * k.norm()).collect();
    let sup_h_s = max_of(h_s.iter().copied());
    let int_h_s_sq: f64 = ds.vertices.iter().zip(&h_s).map(|(&v, h)| h * h * length[v]).sum();
    let inf_s = ds.inf_trace;
    let unweighted = mesh.density().iter().all(|&f| f == 0.0);
    let hyp = |positive: bool| {
        let mut h = vec![
            closed(mesh, false),
            delta_sign(delta, positive),
            Hypothesis::new("b_positive", b > 0.0, format!("b = {b}")),
            Hypothesis::new("density_zero", unweighted, "the bound is stated without density".to_string()),
            Hypothesis::new(
                "laplacian_in_domain",
                is_plain_identity(inp.t),
                format!("operator tensor {}", inp.t.kind.label()),
            ),
        ];
        if positive {
            h.push(quarter_ball(delta, radius));
        }
        h
    };
    let common = |extra: Vec<(&str, serde_json::Value)>| {
        let mut m = meta(vec![
            ("b", json!(b)),
            ("center_of_mass", com_json(&com)),
            ("center_of_mass_measure", json!("domain")),
            ("enclosing_radius", json!(radius)),
            ("volume_domain", json!(vol_omega)),
            ("volume_boundary", json!(vol_m)),
            ("sup_h_s", json!(sup_h_s)),
            ("inf_trace_s", json!(inf_s)),
        ]);
        m.extend(meta(extra));
        m
    };
    let ratio = vol_omega / vol_m;
    let (s_r, _) = profile_unchecked(delta, radius);
    let first1 = n * ratio + b * (n - 1.0) - delta * s_r * s_r * (ratio + b);
    let second1 = delta + sup_h_s * sup_h_s / (inf_s * inf_s);
    let case1 = BoundReport::new(
        BoundId::Thm3Case1,
        Some(format!("b={b}")),
        alpha,
        first1 * second1,
        hyp(false),
        common(vec![("first_factor", json!(first1)), ("second_factor", json!(second1))]),
        tol,
    );
    let first2 = n * ratio + b * (n - 1.0);
    let second2 = delta + int_h_s_sq / (vol_m * inf_s * inf_s);
    let case2 = BoundReport::new(
        BoundId::Thm3Case2,
        Some(format!("b={b}")),
        alpha,
        first2 * second2,
        hyp(true),
        common(vec![("first_factor", json!(first2)), ("second_factor", json!(second2))]),
        tol,
    );
    Ok(vec![case1, case2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::Status;
    use crate::curvature::second_fundamental_form;
    use crate::mesh::{boundary_complex, generate_shape, ShapeKind, ShapeSpec};

    #[test]
    fn unit_sphere_thm1_case1_is_two() {
        let m = generate_shape(&ShapeSpec::new(ShapeKind::RoundSphere { radius: 1.0, center: vec![] }, 4)).unwrap();
        let c = second_fundamental_form(&m).unwrap();
        let id = TangentTensorField::identity(&m);
        let r = bound_thm1(&ClosedInputs { mesh: &m, field: &c, t: &id, s: &id }, 2.0, &Tolerances::default()).unwrap();
        assert!((r[0].rhs - 2.0).abs() < 0.04, "{}", r[0].rhs);
        assert_eq!(r[0].status, Status::EqualityWithinTol);
        assert_eq!(r[1].status, Status::HypothesesUnmet);
    }

    fn boundary_reports(kind: ShapeKind, eigen: f64, b: Option<f64>) -> Vec<BoundReport> {
        let m = generate_shape(&ShapeSpec::new(kind, 4)).unwrap();
        let curve = boundary_complex(&m).unwrap();
        let c = second_fundamental_form(&m).unwrap();
        let id = TangentTensorField::identity(&m);
        let s = BoundaryScalar::constant(&curve, 1.0);
        let inp = BoundaryInputs { mesh: &m, curve: &curve, field: &c, t: &id, s: &s };
        match b {
            Some(b) => bound_thm3(&inp, eigen, b, &Tolerances::default()).unwrap(),
            None => bound_thm2(&inp, eigen, &Tolerances::default()).unwrap(),
        }
    }

    #[test]
    fn hemisphere_thm2_is_two() {
        let r = boundary_reports(ShapeKind::Hemisphere, 1.0, None);
        assert!((r[0].rhs - 2.0).abs() < 0.04, "{}", r[0].rhs);
        assert_eq!(r[0].status, Status::Holds);
    }

    #[test]
    fn flat_disk_thm2_collapses() {
        let r = boundary_reports(ShapeKind::FlatDisk { radius: 1.0 }, 1.0, None);
        assert!(r[0].rhs.abs() < 1e-9);
        assert_eq!(r[0].status, Status::Violated);
    }

    #[test]
    fn flat_disk_thm3_is_b_plus_one() {
        for b in [0.5, 2.0] {
            let r = boundary_reports(ShapeKind::FlatDisk { radius: 1.0 }, b + 1.0, Some(b));
            assert!((r[0].rhs - (b + 1.0)).abs() < 0.01 * (b + 1.0), "{}", r[0].rhs);
            assert_eq!(r[0].status, Status::EqualityWithinTol);
        }
        let r = boundary_reports(ShapeKind::Hemisphere, 2.0, Some(1.0));
        assert!((r[0].rhs - 3.0).abs() < 0.06, "{}", r[0].rhs);
    }
}
