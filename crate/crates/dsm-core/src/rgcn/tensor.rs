//! A minimal dense f64 matrix, row-major, with exactly the operations the
//! network needs. Everything is scalar and iteration order is fixed, so a
//! given sequence of operations is bit-reproducible.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// A rows × cols matrix of 64-bit floats, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: alloc::vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    /// True when the data length matches rows · cols.
    pub fn shape_consistent(&self) -> bool {
        self.data.len() == self.rows * self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// self · rhs. Skips zero entries of self, which makes one-hot rows cheap.
    pub fn matmul(&self, rhs: &Tensor) -> Tensor {
        assert_eq!(self.cols, rhs.rows, "matmul inner dimensions");
        let mut out = Tensor::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let rrow = rhs.row(k);
                let orow = out.row_mut(i);
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// self += c · aᵀ · b, the parameter-gradient shape (d_in × d_out).
    pub fn add_matmul_at_b(&mut self, a: &Tensor, b: &Tensor, c: f64) {
        assert_eq!(a.rows, b.rows, "transposed matmul outer dimensions");
        assert_eq!(
            (self.rows, self.cols),
            (a.cols, b.cols),
            "accumulator shape"
        );
        for i in 0..a.rows {
            for k in 0..a.cols {
                let v = a.get(i, k);
                if v == 0.0 {
                    continue;
                }
                let brow = b.row(i);
                let srow = self.row_mut(k);
                for (s, &w) in srow.iter_mut().zip(brow) {
                    *s += c * v * w;
                }
            }
        }
    }

    /// self[i][j] += c · u[i] · v[j].
    pub fn add_outer(&mut self, u: &[f64], v: &[f64], c: f64) {
        assert_eq!(
            (self.rows, self.cols),
            (u.len(), v.len()),
            "outer product shape"
        );
        for (i, &ui) in u.iter().enumerate() {
            if ui == 0.0 {
                continue;
            }
            let row = self.row_mut(i);
            for (r, &vj) in row.iter_mut().zip(v) {
                *r += c * ui * vj;
            }
        }
    }

    /// self += c · other, elementwise.
    pub fn add_scaled(&mut self, other: &Tensor, c: f64) {
        assert_eq!(self.shape(), other.shape(), "elementwise shape");
        for (s, &o) in self.data.iter_mut().zip(&other.data) {
            *s += c * o;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// out += c · (v · m): a row vector times a matrix. Zero entries of v are
/// skipped (one-hot rows touch a single matrix row).
pub fn vecmat_acc(v: &[f64], m: &Tensor, c: f64, out: &mut [f64]) {
    debug_assert_eq!(v.len(), m.rows);
    debug_assert_eq!(out.len(), m.cols);
    for (k, &vk) in v.iter().enumerate() {
        if vk == 0.0 {
            continue;
        }
        let row = m.row(k);
        let s = c * vk;
        for (o, &w) in out.iter_mut().zip(row) {
            *o += s * w;
        }
    }
}

/// out += c · (v · mᵀ): the backward counterpart of [`vecmat_acc`].
pub fn vecmat_t_acc(v: &[f64], m: &Tensor, c: f64, out: &mut [f64]) {
    debug_assert_eq!(v.len(), m.cols);
    debug_assert_eq!(out.len(), m.rows);
    for (k, o) in out.iter_mut().enumerate() {
        let row = m.row(k);
        let mut acc = 0.0;
        for (&vj, &w) in v.iter().zip(row) {
            acc += vj * w;
        }
        *o += c * acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: usize, cols: usize, data: &[f64]) -> Tensor {
        assert_eq!(data.len(), rows * cols);
        Tensor {
            rows,
            cols,
            data: data.to_vec(),
        }
    }

    #[test]
    fn matmul_matches_hand_product() {
        let a = t(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = t(3, 2, &[7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = a.matmul(&b);
        assert_eq!(c, t(2, 2, &[58.0, 64.0, 139.0, 154.0]));
    }

    #[test]
    fn matmul_skips_zeros_without_changing_results() {
        // One-hot rows exercise the sparse path; compare against the naive
        // triple loop.
        let a = t(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.5, 0.0, -2.0]);
        let b = t(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let fast = a.matmul(&b);
        let mut naive = Tensor::zeros(3, 2);
        for i in 0..3 {
            for k in 0..3 {
                for j in 0..2 {
                    naive.data[i * 2 + j] += a.data[i * 3 + k] * b.data[k * 2 + j];
                }
            }
        }
        assert_eq!(fast, naive);
    }

    #[test]
    fn identity_times_anything_is_itself() {
        let b = t(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(Tensor::identity(3).matmul(&b), b);
    }

    #[test]
    fn transpose_product_accumulates() {
        // add_matmul_at_b computes self += c · aᵀ · b.
        let a = t(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = t(2, 3, &[5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        let mut acc = Tensor::zeros(2, 3);
        acc.add_matmul_at_b(&a, &b, 2.0);
        // aᵀ·b = [[1,3],[2,4]]·b = [[29,33,37],[42,48,54]], then doubled.
        assert_eq!(acc, t(2, 3, &[58.0, 66.0, 74.0, 84.0, 96.0, 108.0]));
    }

    #[test]
    fn outer_product_accumulates() {
        let mut acc = Tensor::zeros(2, 3);
        acc.add_outer(&[1.0, 2.0], &[3.0, 4.0, 5.0], 1.0);
        acc.add_outer(&[1.0, 0.0], &[1.0, 1.0, 1.0], 0.5);
        assert_eq!(acc, t(2, 3, &[3.5, 4.5, 5.5, 6.0, 8.0, 10.0]));
    }

    #[test]
    fn vector_matrix_forms_agree_with_matmul() {
        let m = t(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let v = [1.0, 0.0, 2.0];
        let mut out = [0.0, 0.0];
        vecmat_acc(&v, &m, 1.0, &mut out);
        assert_eq!(out, [11.0, 14.0]); // v·M

        let w = [1.0, 2.0];
        let mut back = [0.0, 0.0, 0.0];
        vecmat_t_acc(&w, &m, 1.0, &mut back);
        assert_eq!(back, [5.0, 11.0, 17.0]); // w·Mᵀ
    }

    #[test]
    fn scaled_addition_and_finiteness() {
        let mut a = t(1, 3, &[1.0, 2.0, 3.0]);
        a.add_scaled(&t(1, 3, &[10.0, 20.0, 30.0]), -0.1);
        assert_eq!(a, t(1, 3, &[0.0, 0.0, 0.0]));
        assert!(a.is_finite());
        a.data[1] = f64::NAN;
        assert!(!a.is_finite());
    }

    #[test]
    fn serde_round_trip() {
        let a = t(2, 2, &[1.5, -2.0, 0.0, 4.25]);
        let json = serde_json::to_string(&a).unwrap();
        let back: Tensor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }
}
