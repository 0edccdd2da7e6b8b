use nalgebra::{DMatrix, DVector};

/// Accumulates `(row, col, value)` contributions; duplicates are summed.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> CsrMatrix {
        // Stable sort keeps the summation order deterministic.
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n: self.n, row_ptr, cols, vals }
    }
}

/// Square sparse matrix in compressed-row form (both triangles stored).
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, row_ptr: vec![0; n + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            y[i] = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
        y
    }

    pub fn quad_form(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&self.mul_vec(y))
    }

    pub fn row_sums(&self) -> DVector<f64> {
        DVector::from_iterator(self.n, (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()))
    }

    pub fn total(&self) -> f64 {
        self.vals.iter().sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &CsrMatrix, s: f64) -> Self {
        assert_eq!(self.n, other.n);
        let mut b = TripletBuilder::new(self.n);
        for (i, j, v) in self.triplets() {
            b.add(i, j, v);
        }
        for (i, j, v) in other.triplets() {
            b.add(i, j, s * v);
        }
        b.build()
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.triplets().map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Principal submatrix on `rows × cols` as a dense matrix.
    pub fn dense_block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        let mut pos = vec![usize::MAX; self.n];
        for (k, &c) in cols.iter().enumerate() {
            pos[c] = k;
        }
        let mut out = DMatrix::zeros(rows.len(), cols.len());
        for (a, &r) in rows.iter().enumerate() {
            for (j, v) in self.row(r) {
                if pos[j] != usize::MAX {
                    out[(a, pos[j])] = v;
                }
            }
        }
        out
    }

    /// Principal submatrix on `idx` kept sparse.
    pub fn sub_matrix(&self, idx: &[usize]) -> CsrMatrix {
        let mut pos = vec![usize::MAX; self.n];
        for (k, &c) in idx.iter().enumerate() {
            pos[c] = k;
        }
        let mut b = TripletBuilder::new(idx.len());
        for (a, &r) in idx.iter().enumerate() {
            for (j, v) in self.row(r) {
                if pos[j] != usize::MAX {
                    b.add(a, pos[j], v);
                }
            }
        }
        b.build()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            out[(i, j)] += v;
        }
        out
    }

    /// Coordinate-format text dump, one `row col value` triple per line.
    pub fn to_coo_text(&self) -> String {
        let mut s = String::new();
        for (i, j, v) in self.triplets() {
            s.push_str(&format!("{i} {j} {v:e}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 1, 1.0);
        b.add(0, 1, 2.0);
        b.add(1, 0, 3.0);
        let m = b.build();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.max_asymmetry(), 0.0);
        let y = m.mul_vec(&DVector::from_vec(vec![1.0, 1.0]));
        assert_eq!(y.as_slice(), &[3.0, 3.0]);
    }
}
