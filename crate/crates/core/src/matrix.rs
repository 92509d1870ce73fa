//! Sparse symmetric {-1, 0, +1} matrix in CSR layout.

use std::collections::BTreeMap;

use crate::model::Domain;
use crate::signed::Sign;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetricSignedMatrix {
    labels: Vec<Domain>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<i8>,
}

impl SymmetricSignedMatrix {
    /// Builds the matrix from directed signed entries over `labels`.
    /// Each entry is mirrored; when a pair is given both signs in any
    /// combination of directions the negative sign is kept. Diagonal
    /// entries are ignored.
    pub fn from_entries<I>(labels: Vec<Domain>, entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Sign)>,
    {
        let n = labels.len();
        let mut cells: BTreeMap<(usize, usize), i8> = BTreeMap::new();
        for (i, j, sign) in entries {
            assert!(i < n && j < n, "entry ({i}, {j}) outside a {n}x{n} matrix");
            if i == j {
                continue;
            }
            let v = sign.value();
            for key in [(i, j), (j, i)] {
                cells
                    .entry(key)
                    .and_modify(|cur| *cur = (*cur).min(v))
                    .or_insert(v);
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(cells.len());
        let mut vals = Vec::with_capacity(cells.len());
        for (&(i, j), &v) in &cells {
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SymmetricSignedMatrix {
            labels,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Unlabelled matrix from a dense square array; the lower triangle and
    /// diagonal are ignored. Intended for tests and small fixtures.
    pub fn from_dense(rows: &[Vec<i8>]) -> Self {
        let n = rows.len();
        let labels = (0..n).map(|i| Domain::literal(&format!("n{i}"))).collect();
        let mut entries = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix is not square");
            for (j, &v) in row.iter().enumerate().skip(i + 1) {
                if let Some(sign) = Sign::from_value(v as i64) {
                    entries.push((i, j, sign));
                }
            }
        }
        Self::from_entries(labels, entries)
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Domain] {
        &self.labels
    }

    /// Number of stored (nonzero) entries, counting both triangles.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[span.clone()].binary_search(&j) {
            Ok(pos) => self.vals[span.start + pos],
            Err(_) => 0,
        }
    }

    /// `out = A x`.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(j, v)| v as f64 * x[j]).sum();
        }
    }

    /// Largest absolute row sum; bounds every eigenvalue's magnitude.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.dim()).map(|i| self.degree(i)).max().unwrap_or(0) as f64
    }

    /// Principal submatrix on `keep` (indices into this matrix, in the
    /// order given).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut position = vec![usize::MAX; self.dim()];
        for (new, &old) in keep.iter().enumerate() {
            position[old] = new;
        }
        let labels = keep.iter().map(|&i| self.labels[i].clone()).collect();
        let mut entries = Vec::new();
        for (new_i, &old_i) in keep.iter().enumerate() {
            for (old_j, v) in self.row(old_i) {
                let new_j = position[old_j];
                if new_j != usize::MAX && new_i < new_j {
                    entries.push((new_i, new_j, if v > 0 { Sign::Positive } else { Sign::Negative }));
                }
            }
        }
        Self::from_entries(labels, entries)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut dense = vec![vec![0.0; n]; n];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v as f64;
            }
        }
        dense
    }
}
