//! Compressed-row complex matrices acting on row-major dense blocks.

use crate::{Matrix, C64};

#[derive(Clone, Debug)]
pub(crate) struct Csr {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<C64>,
}

impl Csr {
    pub fn from_dense(m: &Matrix) -> Self {
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr { dim, row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Row index of every stored entry, in storage order.
    pub fn rows(&self) -> Vec<usize> {
        (0..self.dim).flat_map(|i| std::iter::repeat(i).take(self.row_ptr[i + 1] - self.row_ptr[i])).collect()
    }

    /// out += scale · A·X with X and out row-major `dim × width`, using
    /// `vals` in place of the stored values.
    pub fn mul_acc_with(&self, vals: &[C64], scale: C64, x: &[C64], width: usize, out: &mut [C64]) {
        for i in 0..self.dim {
            let out_row = &mut out[i * width..(i + 1) * width];
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = vals[idx] * scale;
                let x_row = &x[self.cols[idx] * width..(self.cols[idx] + 1) * width];
                for (o, v) in out_row.iter_mut().zip(x_row) {
                    *o += a * v;
                }
            }
        }
    }

    pub fn mul_acc(&self, scale: C64, x: &[C64], width: usize, out: &mut [C64]) {
        self.mul_acc_with(&self.vals, scale, x, width, out);
    }
}

/// Row-major conjugate transpose of a square block.
pub(crate) fn adjoint_into(x: &[C64], dim: usize, out: &mut [C64]) {
    for i in 0..dim {
        for j in 0..dim {
            out[j * dim + i] = x[i * dim + j].conj();
        }
    }
}
