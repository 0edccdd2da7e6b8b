use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenpairs of the symmetric-definite pencil `A x = λ B x`, ascending,
/// with `B`-orthonormal eigenvectors.
///
/// When `deflate` is given, the pencil is restricted to the `B`-orthogonal
/// complement of that vector and the deflated direction is dropped from
/// the output.
pub fn generalized_eigen(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    deflate: Option<&DVector<f64>>,
) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let n = a.nrows();
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::LinearAlgebra("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv_a = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::LinearAlgebra("triangular solve failed".into()))?;
    let c_t = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or_else(|| Error::LinearAlgebra("triangular solve failed".into()))?;
    let mut c = (&c_t + c_t.transpose()) * 0.5;

    let w_hat = deflate.map(|w| {
        let lw = l.transpose() * w;
        let nrm = lw.norm();
        lw / nrm
    });
    if let Some(w) = &w_hat {
        let cw = &c * w;
        let wcw = w.dot(&cw);
        // P C P with P = I - w wᵀ
        c -= &cw * w.transpose() + w * cw.transpose();
        c += (w * w.transpose()) * wcw;
    }

    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    if let Some(w) = &w_hat {
        let drop = (0..n)
            .max_by(|&i, &j| {
                let ai = eig.eigenvectors.column(i).dot(w).abs();
                let aj = eig.eigenvectors.column(j).dot(w).abs();
                ai.total_cmp(&aj)
            })
            .unwrap();
        order.retain(|&i| i != drop);
    }
    let lt = l.transpose();
    let mut values = Vec::with_capacity(order.len());
    let mut vectors = Vec::with_capacity(order.len());
    for i in order {
        let y = eig.eigenvectors.column(i).into_owned();
        let x = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::LinearAlgebra("back substitution failed".into()))?;
        values.push(eig.eigenvalues[i]);
        vectors.push(x);
    }
    Ok((values, vectors))
}
