//! Minimal compressed-row complex matrix for the propagation kernels.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::hilbert::ComplexMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    size: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl CsrMatrix {
    /// Square matrix from (row, col) → value entries; exact zeros are dropped.
    pub fn from_triplets(size: usize, entries: BTreeMap<(usize, usize), Complex64>) -> Self {
        let mut row_ptr = vec![0usize; size + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals = Vec::with_capacity(entries.len());
        for ((r, c), v) in entries {
            if v == ZERO {
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..size {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            size,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_dense(m: &ComplexMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "CsrMatrix is square");
        let mut entries = BTreeMap::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                entries.insert((i, j), m[(i, j)]);
            }
        }
        Self::from_triplets(m.nrows(), entries)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// out += coeff · (M x)
    pub fn mul_add(&self, coeff: Complex64, x: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.size);
        debug_assert_eq!(out.len(), self.size);
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[idx] * x[self.cols[idx]];
            }
            *o += coeff * acc;
        }
    }

    /// ‖M x‖²
    pub fn apply_norm_sqr(&self, x: &[Complex64]) -> f64 {
        (0..self.size)
            .map(|r| {
                let mut acc = ZERO;
                for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.vals[idx] * x[self.cols[idx]];
                }
                acc.norm_sqr()
            })
            .sum()
    }

    pub fn row_abs_sums(&self) -> Vec<f64> {
        (0..self.size)
            .map(|r| {
                self.vals[self.row_ptr[r]..self.row_ptr[r + 1]]
                    .iter()
                    .map(|z| z.norm())
                    .sum()
            })
            .collect()
    }

    pub fn add_to_dense(&self, coeff: Complex64, m: &mut ComplexMatrix) {
        for r in 0..self.size {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[idx])] += coeff * self.vals[idx];
            }
        }
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.size, self.size);
        self.add_to_dense(Complex64::new(1.0, 0.0), &mut m);
        m
    }
}
