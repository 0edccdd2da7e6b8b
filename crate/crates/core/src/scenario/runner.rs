//! Scenario execution: mesh, tensors, spectra, bounds, identities, reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use nalgebra::Matrix2;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Problems, ScenarioConfig, ShapeSource};
use crate::assembly::{assemble_system, AssembledSystem};
use crate::bounds::{
    bound_thm1, bound_thm2, bound_thm3, boundary_identity_checks, classical_bounds, identity_checks, BoundId,
    BoundReport, BoundaryInputs, ClosedInputs, Domain, IdentityReport, Status, Tolerances, COM_TOLERANCE,
};
use crate::curvature::{
    parse_tensor_file, second_fundamental_form, BoundaryScalar, CurvatureField, TangentTensorField, TensorKind,
};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::{boundary_complex, generate_shape, parse_mesh, BoundaryCurve, ImmersedMesh, ShapeSpec};
use crate::spectra::{solve_closed, solve_steklov, solve_wentzell, SpectralResult};

/// Eigenpairs requested from the closed solver.
pub const CLOSED_NEV: usize = 4;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the configured refinement of builtin shapes.
    pub refine: Option<u32>,
    /// Parameter-space jitter of builtin shapes.
    pub jitter_seed: Option<u64>,
}

/// A validated scenario: every input is loaded and consistent.
#[derive(Debug)]
pub struct Prepared {
    pub config: ScenarioConfig,
    pub mesh: ImmersedMesh,
    pub curve: Option<BoundaryCurve>,
    pub problems: Problems,
    pub provenance: Value,
    t_file: Option<Vec<Matrix2<f64>>>,
    s_file: Option<Vec<Matrix2<f64>>>,
}

fn load_tensor_file(kind: &TensorKind, ntri: usize) -> Result<Option<Vec<Matrix2<f64>>>> {
    match kind {
        TensorKind::File { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read tensor file {path}: {e}")))?;
            parse_tensor_file(&text, ntri)
                .map(Some)
                .map_err(|e| Error::Config(format!("tensor file {path}: {e}")))
        }
        _ => Ok(None),
    }
}

/// Load and check every input of a scenario without solving anything.
pub fn prepare(config: &ScenarioConfig, opts: &RunOptions) -> Result<Prepared> {
    let (mesh, provenance) = match &config.shape {
        ShapeSource::Builtin { shape } => {
            let refinement = opts.refine.unwrap_or(config.refinement);
            if refinement > super::config::MAX_REFINEMENT {
                return Err(Error::Config(format!("refinement {refinement} is outside [0, 8]")));
            }
            let mut spec = ShapeSpec::new(shape.clone(), refinement);
            if let Some(d) = &config.density {
                spec = spec.with_density(d.clone());
            }
            if let Some(seed) = opts.jitter_seed {
                spec = spec.with_jitter(seed);
            }
            let mesh = generate_shape(&spec)?;
            (mesh, json!({"source": "builtin", "spec": spec}))
        }
        ShapeSource::File { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read mesh file {}: {e}", path.display())))?;
            let mut mesh = parse_mesh(&text)?;
            if let Some(d) = &config.density {
                let values = mesh.vertices().iter().map(|x| d.evaluate(x)).collect();
                mesh = mesh.with_density(values)?;
            }
            let density = config.density.as_ref().map_or(json!("from_file"), |d| json!(d));
            (mesh, json!({"source": "file", "path": path, "bytes": text.len(), "density": density}))
        }
    };
    let closed = mesh.is_closed();
    let problems = config.problems.clone().unwrap_or(Problems { closed, steklov: !closed, wentzell: vec![] });
    if problems.closed && !closed {
        return Err(Error::Config("the closed eigenvalue problem needs a closed mesh".into()));
    }
    if (problems.steklov || !problems.wentzell.is_empty()) && closed {
        return Err(Error::Config("Steklov and Wentzell problems need a mesh with boundary".into()));
    }
    if let Some(b) = problems.wentzell.iter().find(|&&b| !(b > 0.0)) {
        return Err(Error::Config(format!("Wentzell parameter b must be positive, got {b}")));
    }
    if !problems.closed && !problems.steklov && problems.wentzell.is_empty() {
        return Err(Error::Config("no eigenvalue problem selected".into()));
    }
    let curve = if closed { None } else { Some(boundary_complex(&mesh)?) };
    if !closed && !matches!(config.s, TensorKind::ScaledIdentity { .. }) {
        return Err(Error::Config(format!(
            "on a boundary curve S is a scalar; use identity or scaled_identity, not {}",
            config.s.label()
        )));
    }
    let ntri = mesh.triangles().len();
    let t_file = load_tensor_file(&config.t, ntri)?;
    let s_file = load_tensor_file(&config.s, ntri)?;
    Ok(Prepared { config: config.clone(), mesh, curve, problems, provenance, t_file, s_file })
}

fn build_tensor(
    kind: &TensorKind,
    file: Option<&Vec<Matrix2<f64>>>,
    mesh: &ImmersedMesh,
    field: &CurvatureField,
) -> Result<TangentTensorField> {
    match (kind, file) {
        (TensorKind::ScaledIdentity { c }, _) => Ok(TangentTensorField::scaled_identity(mesh, *c)),
        (TensorKind::Newton { r }, _) => TangentTensorField::newton(mesh, field, *r),
        (TensorKind::File { .. }, Some(values)) => {
            TangentTensorField::from_triangle_values(mesh, field, values.clone(), kind.clone())
        }
        (TensorKind::File { path }, None) => Err(Error::Config(format!("tensor file {path} was not loaded"))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumEntry {
    /// `weighted_operator` for `L_{T,f}`, `laplace` for the unweighted Laplacian.
    pub operator: &'static str,
    #[serde(flatten)]
    pub result: SpectralResult,
    pub note: Option<String>,
}

/// Geometry, tensors, assembled matrices and eigenvalues of a scenario.
pub struct Solved {
    pub field: CurvatureField,
    pub t: TangentTensorField,
    pub s_tensor: Option<TangentTensorField>,
    pub s_scalar: Option<BoundaryScalar>,
    pub system: AssembledSystem,
    pub spectra: Vec<SpectrumEntry>,
}

fn is_plain(t: &TensorKind) -> bool {
    matches!(t, TensorKind::ScaledIdentity { c } if *c == 1.0)
}

pub fn solve(prep: &Prepared) -> Result<Solved> {
    let mesh = &prep.mesh;
    let field = second_fundamental_form(mesh)?;
    let t = build_tensor(&prep.config.t, prep.t_file.as_ref(), mesh, &field)?;
    let unweighted = mesh.density().iter().all(|&f| f == 0.0);
    let standard = is_plain(&prep.config.t) && unweighted;
    let mut spectra = Vec::new();
    let (system, s_tensor, s_scalar) = match &prep.curve {
        None => {
            let s = build_tensor(&prep.config.s, prep.s_file.as_ref(), mesh, &field)?;
            let system = assemble_system(mesh, &t, None)?;
            let op = solve_closed(&system, CLOSED_NEV)?;
            if !standard {
                let plain = mesh.with_density(vec![0.0; mesh.num_vertices()])?;
                let sys = assemble_system(&plain, &TangentTensorField::identity(&plain), None)?;
                let result = solve_closed(&sys, CLOSED_NEV)?;
                spectra.push(SpectrumEntry { operator: "laplace", result, note: None });
            }
            spectra.insert(0, SpectrumEntry { operator: "weighted_operator", result: op, note: None });
            (system, Some(s), None)
        }
        Some(curve) => {
            let c = match prep.config.s {
                TensorKind::ScaledIdentity { c } => c,
                _ => return Err(Error::Config("S must be a scalar on the boundary".into())),
            };
            let s = BoundaryScalar::constant(curve, c);
            let system = assemble_system(mesh, &t, Some((curve, &s)))?;
            if prep.problems.steklov {
                let result = solve_steklov(&system)?;
                spectra.push(SpectrumEntry { operator: "weighted_operator", result, note: None });
            }
            for &b in &prep.problems.wentzell {
                let result = solve_wentzell(&system, b)?;
                let note = (!standard).then(|| {
                    "outside_hypotheses: the Wentzell problem is posed for the unweighted Laplacian".to_string()
                });
                spectra.push(SpectrumEntry { operator: "weighted_operator", result, note });
            }
            (system, None, Some(s))
        }
    };
    Ok(Solved { field, t, s_tensor, s_scalar, system, spectra })
}

#[derive(Clone, Debug, Serialize)]
pub struct Finding {
    pub kind: &'static str,
    pub id: String,
    pub variant: Option<String>,
    pub domain: Option<Domain>,
    pub status: Status,
    pub literal_status: Status,
    pub lhs: f64,
    pub rhs: f64,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub scenario_id: String,
    pub mesh: Value,
    pub conventions: Value,
    pub tensors: Value,
    pub problems: Problems,
    pub spectra: Vec<SpectrumEntry>,
    pub bounds: Vec<BoundReport>,
    pub identities: Vec<IdentityReport>,
    pub findings: Vec<Finding>,
    pub failures: Vec<Finding>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// `bound_id,lhs,rhs,slack,status`; variants are appended to the id.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bound_id,lhs,rhs,slack,status\n");
        for b in &self.bounds {
            let id = match &b.variant {
                Some(v) => format!("{}[{v}]", b.bound_id.as_str()),
                None => b.bound_id.as_str().to_string(),
            };
            let _ = writeln!(s, "{id},{},{},{},{}", b.lhs, b.rhs, b.slack, b.status.as_str());
        }
        s
    }

    pub fn bound(&self, id: BoundId, variant: Option<&str>) -> Option<&BoundReport> {
        self.bounds.iter().find(|b| b.bound_id == id && b.variant.as_deref() == variant)
    }
}

fn conventions(tol: &Tolerances) -> Value {
    json!({
        "sup_inf": "max/min over vertex values",
        "integrals": "lumped vertex weights (row sums of the mass matrices)",
        "weighted_measure": "e^{-f} by midpoint quadrature on triangles and 2-point Gauss on boundary edges",
        "mean_curvature": "H_T = tr(T B), so H_Id = n H",
        "slack": "rhs - lhs; bounds read lhs <= rhs",
        "identity_residual": "oriented so that the check reads residual <= 0",
        "bound_normalization": "max(|lhs|, |rhs|, 1e-30)",
        "center_of_mass_tolerance": COM_TOLERANCE,
        "non_finite_values": "serialized as null",
        "tolerances": tol,
    })
}

fn bound_note(b: &BoundReport, delta: f64) -> String {
    match b.bound_id {
        BoundId::Thm2Case1 if delta <= 0.0 => "the right-hand side vanishes for delta <= 0 while the Steklov \
            eigenvalue is positive; the argument behind this case integrates a divergence over a domain with \
            boundary without a boundary term; recorded without a correction"
            .into(),
        _ => "the bound is violated on this discretization".into(),
    }
}

fn identity_finding(r: &IdentityReport, note: String) -> Finding {
    Finding {
        kind: "identity",
        id: r.identity_id.as_str().into(),
        variant: None,
        domain: Some(r.domain),
        status: r.status,
        literal_status: r.literal_status(),
        lhs: r.lhs,
        rhs: r.rhs,
        note,
    }
}

pub fn evaluate(prep: &Prepared, solved: &Solved) -> Result<ScenarioReport> {
    let cfg = &prep.config;
    let tol = &cfg.tolerances;
    let mesh = &prep.mesh;
    let mut bounds = Vec::new();
    let mut identities = Vec::new();
    match (&prep.curve, &solved.s_tensor, &solved.s_scalar) {
        (None, Some(s), _) => {
            let inp = ClosedInputs { mesh, field: &solved.field, t: &solved.t, s };
            let op = solved.spectra[0].result.eigenvalue_1;
            let laplace = solved.spectra.iter().find(|e| e.operator == "laplace").map_or(op, |e| e.result.eigenvalue_1);
            bounds.extend(classical_bounds(&inp, laplace, op, tol)?);
            bounds.extend(bound_thm1(&inp, op, tol)?);
            identities.extend(identity_checks(&inp, tol)?);
        }
        (Some(curve), _, Some(s)) => {
            let inp = BoundaryInputs { mesh, curve, field: &solved.field, t: &solved.t, s };
            for e in &solved.spectra {
                match e.result.b {
                    None => bounds.extend(bound_thm2(&inp, e.result.eigenvalue_1, tol)?),
                    Some(b) => bounds.extend(bound_thm3(&inp, e.result.eigenvalue_1, b, tol)?),
                }
            }
            identities.extend(boundary_identity_checks(&inp, tol)?);
        }
        _ => return Err(Error::Config("inconsistent scenario state".into())),
    }
    if let Some(keep) = &cfg.bounds {
        bounds.retain(|b| keep.contains(&b.bound_id));
    }
    if let Some(keep) = &cfg.identities {
        identities.retain(|r| keep.contains(&r.identity_id));
    }
    bounds.sort_by_key(|b| b.bound_id);
    identities.sort_by_key(|r| r.identity_id);

    let delta = mesh.space().delta;
    let mut findings = Vec::new();
    for b in bounds.iter().filter(|b| b.status == Status::Violated) {
        findings.push(Finding {
            kind: "bound",
            id: b.bound_id.as_str().into(),
            variant: b.variant.clone(),
            domain: None,
            status: b.status,
            literal_status: b.status,
            lhs: b.lhs,
            rhs: b.rhs,
            note: bound_note(b, delta),
        });
    }
    let mut failures = Vec::new();
    for r in &identities {
        if r.status == Status::Violated {
            failures.push(identity_finding(r, "a check that applies to this manifold is violated".into()));
        } else if r.status == Status::HypothesesUnmet
            && r.literal_status() == Status::Violated
            && r.hypotheses.iter().all(|h| h.passed || h.name == "closed")
        {
            let note = "the closed-manifold integral form fails on a domain with boundary; \
                see metadata for the boundary flux"
                .to_string();
            findings.push(identity_finding(r, note));
        }
    }

    let curve = prep.curve.as_ref();
    let mesh_json = json!({
        "provenance": prep.provenance,
        "summary": {
            "model": format!("{:?}", mesh.space().kind()).to_lowercase(),
            "delta": delta,
            "ambient_dim": mesh.space().ambient_dim,
            "vertices": mesh.num_vertices(),
            "triangles": mesh.triangles().len(),
            "edges": mesh.edge_count(),
            "euler_characteristic": mesh.euler_characteristic(),
            "closed": mesh.is_closed(),
            "boundary_loops": curve.map_or(0, |c| c.loops.len()),
            "area": mesh.total_area(),
            "boundary_length": mesh.boundary_length(),
            "weighted_volume": mesh.vertex_weights().sum(),
            "mean_edge_length": mesh.mean_edge_length(),
            "codimension": solved.field.codimension,
        },
    });
    let tensors = json!({
        "t": cfg.t.label(),
        "s": cfg.s.label(),
        "s_role": if curve.is_some() { "boundary scalar" } else { "tangent tensor" },
        "t_divergence_free": solved.t.divergence_free,
        "density": mesh.density().iter().all(|&f| f == 0.0).then_some("zero").unwrap_or("nonzero"),
    });
    Ok(ScenarioReport {
        scenario_id: cfg.id.clone(),
        mesh: mesh_json,
        conventions: conventions(tol),
        tensors,
        problems: prep.problems.clone(),
        spectra: solved.spectra.clone(),
        bounds,
        identities,
        findings,
        failures,
    })
}

pub fn run(prep: &Prepared) -> Result<(ScenarioReport, Solved)> {
    let solved = solve(prep)?;
    let report = evaluate(prep, &solved)?;
    Ok((report, solved))
}

/// Outcome of one scenario in a batch.
pub struct Outcome {
    pub result: Result<(ScenarioReport, Solved)>,
    pub started: SystemTime,
    pub elapsed_seconds: f64,
}

/// Run prepared scenarios on up to `workers` threads; results keep input order.
pub fn run_batch(prepared: &[Prepared], workers: usize) -> Vec<Outcome> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Outcome>>> = prepared.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, prepared.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(prep) = prepared.get(i) else { break };
                let started = SystemTime::now();
                let clock = Instant::now();
                let result = run(prep);
                let outcome = Outcome { result, started, elapsed_seconds: clock.elapsed().as_secs_f64() };
                *slots[i].lock().expect("slot lock") = Some(outcome);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every scenario ran")).collect()
}

fn unix(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Coordinate dumps of the assembled matrices, keyed by file suffix.
pub fn matrix_dumps(system: &AssembledSystem) -> Vec<(&'static str, &CsrMatrix)> {
    let mut out = vec![("stiffness", &system.stiffness), ("mass", &system.mass)];
    if let Some(b) = &system.boundary_mass {
        out.push(("boundary_mass", b));
    }
    if let Some(k) = &system.boundary_stiffness {
        out.push(("boundary_stiffness", k));
    }
    out
}

pub fn write_matrices(dir: &Path, id: &str, system: &AssembledSystem) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, m) in matrix_dumps(system) {
        let path = dir.join(format!("{id}.{name}.coo"));
        std::fs::write(&path, AssembledSystem::dump(m))?;
        written.push(path);
    }
    Ok(written)
}

/// Write `<id>.json`, `<id>.csv` and the `<id>.run.json` sidecar.
pub fn write_report(dir: &Path, report: &ScenarioReport, started: SystemTime, elapsed: f64) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let id = &report.scenario_id;
    let json_path = dir.join(format!("{id}.json"));
    let csv_path = dir.join(format!("{id}.csv"));
    let run_path = dir.join(format!("{id}.run.json"));
    std::fs::write(&json_path, report.to_json()?)?;
    std::fs::write(&csv_path, report.to_csv())?;
    let sidecar = json!({
        "scenario_id": id,
        "started_unix": unix(started),
        "finished_unix": unix(started) + elapsed,
        "elapsed_seconds": elapsed,
        "passed": report.passed(),
    });
    std::fs::write(&run_path, serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(vec![json_path, csv_path, run_path])
}
