use alloc::vec::Vec;
use core::fmt::Debug;
use core::iter::Sum;
use core::ops::AddAssign;

use num_traits::Float;

/// Floating-point element type: `f32` for training, `f64` for gradient checks.
pub trait Scalar: Float + Default + Debug + Sum + AddAssign + Send + Sync + 'static {
    fn of(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }
    fn as_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn as_f64(self) -> f64 {
        self
    }
}

/// A dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<F> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<F>,
}

impl<F: Scalar> Tensor<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: alloc::vec![F::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), rows * cols, "tensor data does not match its shape");
        Self { rows, cols, data }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [F] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> F {
        self.data[r * self.cols + c]
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn add_assign(&mut self, other: &Tensor<F>) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// `self · other`
    pub fn matmul(&self, other: &Tensor<F>) -> Tensor<F> {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Tensor::zeros(self.rows, other.cols);
        matmul_acc(self, other, &mut out);
        out
    }

    /// `self · otherᵀ`
    pub fn matmul_bt(&self, other: &Tensor<F>) -> Tensor<F> {
        assert_eq!(self.cols, other.cols, "matmul_bt shape mismatch");
        let mut out = Tensor::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                out.data[i * other.rows + j] = dot(a, other.row(j));
            }
        }
        out
    }

    pub fn transpose(&self) -> Tensor<F> {
        let mut out = Tensor::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn sum(&self) -> F {
        self.data.iter().copied().sum()
    }
}

pub(crate) fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    let mut s = F::zero();
    for (&x, &y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// `out += a · b`
pub(crate) fn matmul_acc<F: Scalar>(a: &Tensor<F>, b: &Tensor<F>, out: &mut Tensor<F>) {
    let n = b.cols;
    for i in 0..a.rows {
        let out_row = &mut out.data[i * n..(i + 1) * n];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == F::zero() {
                continue;
            }
            let b_row = &b.data[k * n..(k + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += aik * bv;
            }
        }
    }
}

/// `out += aᵀ · b`
pub(crate) fn matmul_at_acc<F: Scalar>(a: &Tensor<F>, b: &Tensor<F>, out: &mut Tensor<F>) {
    debug_assert_eq!(a.rows, b.rows);
    let n = b.cols;
    for r in 0..a.rows {
        let b_row = &b.data[r * n..(r + 1) * n];
        for k in 0..a.cols {
            let ark = a.data[r * a.cols + k];
            if ark == F::zero() {
                continue;
            }
            let out_row = &mut out.data[k * n..(k + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += ark * bv;
            }
        }
    }
}

/// `out += a · bᵀ`
pub(crate) fn matmul_bt_acc<F: Scalar>(a: &Tensor<F>, b: &Tensor<F>, out: &mut Tensor<F>) {
    for i in 0..a.rows {
        let ar = a.row(i);
        for j in 0..b.rows {
            out.data[i * b.rows + j] += dot(ar, b.row(j));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products() {
        let a = Tensor::from_vec(2, 3, alloc::vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Tensor::from_vec(3, 2, alloc::vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        assert_eq!(a.matmul(&b).data, alloc::vec![58.0, 64.0, 139.0, 154.0]);
        assert_eq!(a.matmul_bt(&b.transpose()).data, alloc::vec![58.0, 64.0, 139.0, 154.0]);
        let mut at = Tensor::zeros(3, 3);
        matmul_at_acc(&a, &a, &mut at);
        assert_eq!(at, a.transpose().matmul(&a));
    }
}
