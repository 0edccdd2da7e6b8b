//! First positive eigenvalues of the closed, Steklov and Wentzell problems.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::assembly::AssembledSystem;
use crate::error::{Error, Result};
use crate::linalg::dense::generalized_eigen;
use crate::linalg::envelope::EnvelopeCholesky;
use crate::linalg::lanczos::{relative_residual, smallest_eigenpairs, LanczosOptions};
use crate::linalg::CsrMatrix;

/// Closed problems up to this many unknowns are solved densely.
pub const DENSE_LIMIT: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Closed,
    Steklov,
    Wentzell,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralResult {
    pub problem_kind: ProblemKind,
    pub eigenvalue_1: f64,
    #[serde(skip)]
    pub eigenvector_1: DVector<f64>,
    pub next_eigenvalues: Vec<f64>,
    /// `‖Ax − λBx‖ / (‖Ax‖ + |λ|‖Bx‖)` for the first eigenpair.
    pub residual: f64,
    /// `|1ᵀBx| / ‖x‖_B` for the first eigenvector.
    pub deflation_report: f64,
    pub solver: String,
    /// Wentzell parameter `b`, when applicable.
    pub b: Option<f64>,
}

fn deflation(b: &CsrMatrix, x: &DVector<f64>) -> f64 {
    let ones = DVector::from_element(x.len(), 1.0);
    let bx = b.mul_vec(x);
    ones.dot(&bx).abs() / x.dot(&bx).sqrt()
}

/// Smallest nonzero `λ` of `K u = λ M u` with constants deflated.
pub fn solve_closed(system: &AssembledSystem, nev: usize) -> Result<SpectralResult> {
    let (k, m) = (&system.stiffness, &system.mass);
    let n = k.dim();
    let ones = DVector::from_element(n, 1.0);
    let nev = nev.max(1).min(n - 1);
    let (values, vectors, solver) = if n <= DENSE_LIMIT {
        let (vals, vecs) = generalized_eigen(&k.to_dense(), &m.to_dense(), Some(&ones))?;
        (vals[..nev].to_vec(), vecs[..nev].to_vec(), "dense".to_string())
    } else {
        let out = smallest_eigenpairs(k, m, Some(&ones), nev, LanczosOptions::default())?;
        (out.values, out.vectors, format!("block_lanczos({} iterations)", out.iterations))
    };
    let x = vectors[0].clone();
    let residual = relative_residual(k, m, values[0], &x);
    if !(values[0] > 0.0) {
        return Err(Error::LinearAlgebra(format!("first deflated eigenvalue {} is not positive", values[0])));
    }
    Ok(SpectralResult {
        problem_kind: ProblemKind::Closed,
        eigenvalue_1: values[0],
        deflation_report: deflation(m, &x),
        eigenvector_1: x,
        next_eigenvalues: values[1..].to_vec(),
        residual,
        solver,
        b: None,
    })
}

/// Dirichlet-to-Neumann condensation of `K` onto the boundary DOFs.
pub struct Condensed {
    pub schur: DMatrix<f64>,
    pub boundary_mass: DMatrix<f64>,
    pub boundary_stiffness: DMatrix<f64>,
    interior_factor: Option<EnvelopeCholesky>,
    k_ib: DMatrix<f64>,
}

impl Condensed {
    pub fn new(system: &AssembledSystem) -> Result<Self> {
        let bm = system
            .boundary_mass
            .as_ref()
            .ok_or_else(|| Error::ClosedMesh("Steklov-type problems need a boundary".into()))?;
        let bk = system.boundary_stiffness.as_ref().expect("assembled together with the boundary mass");
        let (bd, id) = (&system.boundary_dofs, &system.interior_dofs);
        let k = &system.stiffness;
        let k_bb = k.dense_block(bd, bd);
        let k_ib = k.dense_block(id, bd);
        let (schur, interior_factor) = if id.is_empty() {
            (k_bb, None)
        } else {
            let factor = EnvelopeCholesky::factor(&k.sub_matrix(id))
                .map_err(|e| Error::LinearAlgebra(format!("interior stiffness block is singular: {e}")))?;
            let mut s = k_bb;
            for j in 0..bd.len() {
                let col = factor.solve(&k_ib.column(j).into_owned());
                for i in 0..bd.len() {
                    s[(i, j)] -= k_ib.column(i).dot(&col);
                }
            }
            let s = (&s + s.transpose()) * 0.5;
            (s, Some(factor))
        };
        Ok(Self {
            schur,
            boundary_mass: bm.dense_block(bd, bd),
            boundary_stiffness: bk.dense_block(bd, bd),
            interior_factor,
            k_ib,
        })
    }

    /// Harmonic (`L_{T,f}`-harmonic) extension of boundary values to all DOFs.
    pub fn extend(&self, system: &AssembledSystem, y: &DVector<f64>) -> DVector<f64> {
        let mut u = DVector::zeros(system.dim());
        for (i, &v) in system.boundary_dofs.iter().enumerate() {
            u[v] = y[i];
        }
        if let Some(f) = &self.interior_factor {
            let ui = -f.solve(&(&self.k_ib * y));
            for (i, &v) in system.interior_dofs.iter().enumerate() {
                u[v] = ui[i];
            }
        }
        u
    }
}

fn boundary_solve(
    system: &AssembledSystem,
    cond: &Condensed,
    a: &DMatrix<f64>,
    kind: ProblemKind,
    b: Option<f64>,
) -> Result<SpectralResult> {
    let nb = system.boundary_dofs.len();
    let ones = DVector::from_element(nb, 1.0);
    let (vals, vecs) = generalized_eigen(a, &cond.boundary_mass, Some(&ones))?;
    let y = vecs[0].clone();
    let ay = a * &y;
    let by = &cond.boundary_mass * &y;
    let residual = (&ay - &by * vals[0]).norm() / (ay.norm() + vals[0].abs() * by.norm());
    let deflation_report = ones.dot(&by).abs() / y.dot(&by).sqrt();
    if !(vals[0] > 0.0) {
        return Err(Error::LinearAlgebra(format!("first deflated eigenvalue {} is not positive", vals[0])));
    }
    Ok(SpectralResult {
        problem_kind: kind,
        eigenvalue_1: vals[0],
        eigenvector_1: cond.extend(system, &y),
        next_eigenvalues: vals.iter().skip(1).take(3).copied().collect(),
        residual,
        deflation_report,
        solver: "condensed_dense".into(),
        b,
    })
}

/// `σ₁` of the condensed problem `S y = σ B y`.
pub fn solve_steklov(system: &AssembledSystem) -> Result<SpectralResult> {
    let cond = Condensed::new(system)?;
    boundary_solve(system, &cond, &cond.schur, ProblemKind::Steklov, None)
}

/// `α₁` of `(S + b K_∂) y = α B y`; `b = 0` gives the Steklov problem.
pub fn solve_wentzell(system: &AssembledSystem, b: f64) -> Result<SpectralResult> {
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::Domain(format!("Wentzell parameter b must be non-negative, got {b}")));
    }
    let cond = Condensed::new(system)?;
    let a = &cond.schur + &cond.boundary_stiffness * b;
    boundary_solve(system, &cond, &a, ProblemKind::Wentzell, Some(b))
}

/// Same `σ₁`, from the uncondensed pencil `K u = σ B u`.
///
/// `B` is singular, so the pencil is transformed to `B u = μ (K + B) u`
/// with `μ = 1/(1 + σ)`; `μ = 1` is the constant mode.
pub fn solve_steklov_full(system: &AssembledSystem) -> Result<f64> {
    let bm = system
        .boundary_mass
        .as_ref()
        .ok_or_else(|| Error::ClosedMesh("Steklov problem needs a boundary".into()))?;
    let b = bm.to_dense();
    let kb = system.stiffness.to_dense() + &b;
    let (mu, _) = generalized_eigen(&b, &kb, None)?;
    let mut mu = mu;
    mu.sort_by(|a, b| b.total_cmp(a));
    Ok(1.0 / mu[1] - 1.0)
}

/// Rayleigh quotient `xᵀAx / xᵀBx`.
pub fn rayleigh_quotient(a: &CsrMatrix, b: &CsrMatrix, x: &DVector<f64>) -> f64 {
    a.quad_form(x, x) / b.quad_form(x, x)
}
