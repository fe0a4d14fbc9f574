//! Compressed sparse row storage for real symmetric operators.

use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Builds from per-row (column, value) lists; entries within a row are
    /// sorted and duplicates summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().expect("entry") += v;
                } else {
                    cols.push(c as u32);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, values }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(c, v)| (c, *v)).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&(j as u32)) {
            Ok(p) => self.values[range.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (self.cols[p] as usize, self.values[p]))
    }

    /// max |H_ab − H_ba| over stored entries.
    pub fn asymmetry(&self) -> f64 {
        (0..self.dim)
            .into_par_iter()
            .map(|i| self.row(i).map(|(j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }

    /// y = A x. Rows are summed sequentially, so the result does not depend
    /// on the thread count.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(i, yi)| {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[p] * x[self.cols[p] as usize];
            }
            *yi = s;
        });
    }

    /// Bounds on the spectrum from Gershgorin discs.
    pub fn gershgorin(&self) -> (f64, f64) {
        (0..self.dim)
            .map(|i| {
                let mut d = 0.0;
                let mut off = 0.0;
                for (j, v) in self.row(i) {
                    if j == i {
                        d = v;
                    } else {
                        off += v.abs();
                    }
                }
                (d - off, d + off)
            })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
    }
}
