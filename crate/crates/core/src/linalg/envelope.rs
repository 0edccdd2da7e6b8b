//! Envelope (variable-band) Cholesky factorization with reverse Cuthill–McKee
//! ordering. Adequate for the surface meshes handled here, whose RCM profile
//! grows like n^1.5.

use std::collections::VecDeque;

use nalgebra::DVector;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Reverse Cuthill–McKee permutation; `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, mask: &[bool]| -> (Vec<usize>, usize) {
        let mut seen = vec![false; n];
        let mut level = vec![0usize; n];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut last = start;
        while let Some(u) = queue.pop_front() {
            last = u;
            for &w in &adj[u] {
                if !seen[w] && !mask[w] {
                    seen[w] = true;
                    level[w] = level[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        (level, last)
    };

    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        // Pseudo-peripheral start: a few sweeps to the farthest node.
        let mut start = seed;
        let mut ecc = 0;
        for _ in 0..4 {
            let (level, far) = bfs_levels(start, &visited);
            if level[far] <= ecc {
                break;
            }
            ecc = level[far];
            start = far;
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = adj[u].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Cholesky factor `PAPᵀ = LLᵀ` stored row-wise inside the envelope.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (j, _) in a.row(old) {
                let nj = inv[j];
                if nj < first[new] {
                    first[new] = nj;
                }
            }
        }
        let mut offset = vec![0usize; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let mut values = vec![0.0; offset[n]];
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in a.row(old) {
                let nj = inv[j];
                if nj <= new {
                    values[offset[new] + nj - first[new]] += v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let oi = offset[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let oj = offset[j];
                let row_i = &values[oi + lo - fi..oi + j - fi];
                let row_j = &values[oj + lo - fj..oj + j - fj];
                let dot: f64 = row_i.iter().zip(row_j).map(|(x, y)| x * y).sum();
                let diag_j = values[oj + j - fj];
                let idx = oi + j - fi;
                values[idx] = (values[idx] - dot) / diag_j;
            }
            let row_i = &values[oi..oi + i - fi];
            let sq: f64 = row_i.iter().map(|x| x * x).sum();
            let d = values[oi + i - fi] - sq;
            if !(d > 0.0) {
                return Err(Error::LinearAlgebra(format!(
                    "matrix not positive definite (pivot {d:e} at row {i})"
                )));
            }
            values[oi + i - fi] = d.sqrt();
        }
        Ok(Self { n, perm, first, offset, values })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let oi = self.offset[i];
            let row = &self.values[oi..oi + i - fi];
            let dot: f64 = row.iter().zip(&y[fi..i]).map(|(l, x)| l * x).sum();
            y[i] = (y[i] - dot) / self.values[oi + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let oi = self.offset[i];
            y[i] /= self.values[oi + i - fi];
            let xi = y[i];
            for (k, l) in (fi..i).zip(&self.values[oi..oi + i - fi]) {
                y[k] -= l * xi;
            }
        }
        let mut x = DVector::zeros(n);
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sparse::TripletBuilder;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 2.5);
            if i + 1 < n {
                b.add(i, i + 1, -1.0);
                b.add(i + 1, i, -1.0);
            }
        }
        // a long-range coupling to exercise the envelope
        b.add(0, n - 1, -0.1);
        b.add(n - 1, 0, -0.1);
        b.build()
    }

    #[test]
    fn solve_matches_dense() {
        let a = laplacian_1d(40);
        let f = EnvelopeCholesky::factor(&a).unwrap();
        let rhs = DVector::from_fn(40, |i, _| (i as f64 * 0.37).sin());
        let x = f.solve(&rhs);
        let res = a.mul_vec(&x) - &rhs;
        assert!(res.norm() < 1e-12);
    }

    #[test]
    fn rcm_is_permutation() {
        let a = laplacian_1d(17);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort();
        assert_eq!(p, (0..17).collect::<Vec<_>>());
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(1, 1, -1.0);
        assert!(EnvelopeCholesky::factor(&b.build()).is_err());
    }
}
