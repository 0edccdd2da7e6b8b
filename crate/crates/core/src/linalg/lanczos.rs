//! Shift-invert block Lanczos for the smallest eigenpairs of `K x = λ M x`
//! with `K` symmetric positive semidefinite and `M` symmetric positive
//! definite.
//!
//! The iteration runs in the `M` inner product on the operator
//! `(K + τM)⁻¹M`, which is `M`-self-adjoint. Every new block is fully
//! reorthogonalized against the stored basis (twice) and against an
//! optional deflation vector. Blocks handle eigenvalue clusters up to the
//! block size, which matters on symmetric meshes where multiplicities are
//! exact.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::envelope::EnvelopeCholesky;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_basis: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 5000, max_basis: 360 }
    }
}

#[derive(Clone, Debug)]
pub struct EigenOutput {
    pub values: Vec<f64>,
    pub vectors: Vec<DVector<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Scale-free residual `‖Kx − λMx‖ / (‖Kx‖ + |λ|‖Mx‖)`.
pub fn relative_residual(k: &CsrMatrix, m: &CsrMatrix, lambda: f64, x: &DVector<f64>) -> f64 {
    let kx = k.mul_vec(x);
    let mx = m.mul_vec(x);
    let denom = kx.norm() + lambda.abs() * mx.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (&kx - &mx * lambda).norm() / denom
}

struct Operator<'a> {
    m: &'a CsrMatrix,
    factor: EnvelopeCholesky,
    deflate: Option<(DVector<f64>, DVector<f64>, f64)>,
}

impl Operator<'_> {
    fn project(&self, v: &mut DVector<f64>) {
        if let Some((c, mc, cmc)) = &self.deflate {
            let coef = mc.dot(v) / cmc;
            v.axpy(-coef, c, 1.0);
        }
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut w = self.factor.solve(&self.m.mul_vec(v));
        self.project(&mut w);
        w
    }
}

struct Basis {
    v: Vec<DVector<f64>>,
    mv: Vec<DVector<f64>>,
}

impl Basis {
    fn orthogonalize(&self, w: &mut DVector<f64>) {
        for _ in 0..2 {
            for (vi, mvi) in self.v.iter().zip(&self.mv) {
                let c = mvi.dot(w);
                w.axpy(-c, vi, 1.0);
            }
        }
    }
}

pub fn smallest_eigenpairs(
    k: &CsrMatrix,
    m: &CsrMatrix,
    deflate: Option<&DVector<f64>>,
    nev: usize,
    opts: LanczosOptions,
) -> Result<EigenOutput> {
    let n = k.dim();
    let available = n - usize::from(deflate.is_some());
    if nev == 0 || nev > available {
        return Err(Error::LinearAlgebra(format!("cannot extract {nev} eigenpairs from dimension {n}")));
    }
    let diag_k: f64 = (0..n).map(|i| k.get(i, i)).sum();
    let diag_m: f64 = (0..n).map(|i| m.get(i, i)).sum();
    let tau = 0.1 * diag_k / diag_m / n as f64;
    let tau = if tau > 0.0 { tau } else { 1.0 };
    let factor = EnvelopeCholesky::factor(&k.add_scaled(m, tau))?;
    let op = Operator {
        m,
        factor,
        deflate: deflate.map(|c| {
            let mc = m.mul_vec(c);
            let cmc = c.dot(&mc);
            (c.clone(), mc, cmc)
        }),
    };

    let block = nev.max(4).min(available);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a4c);
    let random_vec = |rng: &mut ChaCha8Rng| -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5)
    };

    let mut start: Vec<DVector<f64>> = (0..block).map(|_| random_vec(&mut rng)).collect();
    let mut iterations = 0usize;
    let mut best_residual = f64::INFINITY;

    loop {
        let mut basis = Basis { v: Vec::new(), mv: Vec::new() };
        let mut op_v: Vec<DVector<f64>> = Vec::new();
        let mut pending = start.clone();
        loop {
            // M-orthonormalize the pending block against the basis.
            let mut new_cols = Vec::new();
            for mut w in pending.drain(..) {
                op.project(&mut w);
                for attempt in 0..3 {
                    let before = w.dot(&m.mul_vec(&w)).sqrt();
                    basis.orthogonalize(&mut w);
                    let mw = m.mul_vec(&w);
                    let after = w.dot(&mw).sqrt();
                    if after > 1e-10 * before.max(f64::MIN_POSITIVE) && after > 0.0 {
                        w /= after;
                        let mw = mw / after;
                        basis.v.push(w.clone());
                        basis.mv.push(mw);
                        new_cols.push(w);
                        break;
                    }
                    if attempt == 2 || basis.v.len() >= available {
                        break;
                    }
                    w = random_vec(&mut rng);
                    op.project(&mut w);
                }
            }
            if new_cols.is_empty() {
                break;
            }
            for w in &new_cols {
                op_v.push(op.apply(w));
            }
            iterations += 1;

            let dim = basis.v.len();
            let mut h = DMatrix::zeros(dim, dim);
            for a in 0..dim {
                for b in a..dim {
                    let val = 0.5 * (basis.mv[a].dot(&op_v[b]) + basis.mv[b].dot(&op_v[a]));
                    h[(a, b)] = val;
                    h[(b, a)] = val;
                }
            }
            let want = nev.min(dim);
            if dim >= nev {
                let eig = SymmetricEigen::new(h);
                let mut order: Vec<usize> = (0..dim).collect();
                order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
                let mut values = Vec::with_capacity(want);
                let mut vectors = Vec::with_capacity(want);
                let mut residuals = Vec::with_capacity(want);
                for &i in order.iter().take(want) {
                    let theta = eig.eigenvalues[i];
                    let y = eig.eigenvectors.column(i);
                    let mut x = DVector::zeros(n);
                    for (a, va) in basis.v.iter().enumerate() {
                        x.axpy(y[a], va, 1.0);
                    }
                    let lambda = 1.0 / theta - tau;
                    residuals.push(relative_residual(k, m, lambda, &x));
                    values.push(lambda);
                    vectors.push(x);
                }
                let worst = residuals.iter().copied().fold(0.0, f64::max);
                best_residual = best_residual.min(worst);
                if worst < opts.tolerance || dim >= available {
                    return Ok(EigenOutput { values, vectors, residuals, iterations });
                }
                if dim + block > opts.max_basis.max(2 * block) {
                    // Restart from the current best Ritz vectors.
                    let mut restart = vectors;
                    let mut extra: Vec<DVector<f64>> = order
                        .iter()
                        .skip(want)
                        .take(block.saturating_sub(want))
                        .map(|&i| {
                            let y = eig.eigenvectors.column(i);
                            let mut x = DVector::zeros(n);
                            for (a, va) in basis.v.iter().enumerate() {
                                x.axpy(y[a], va, 1.0);
                            }
                            x
                        })
                        .collect();
                    restart.append(&mut extra);
                    start = restart;
                    break;
                }
            }
            if iterations >= opts.max_iterations {
                return Err(Error::NoConvergence { iterations, residual: best_residual });
            }
            pending = op_v[op_v.len() - new_cols.len()..].to_vec();
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NoConvergence { iterations, residual: best_residual });
        }
    }
}
