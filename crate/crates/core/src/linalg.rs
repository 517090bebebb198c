//! Dense complex matrix helpers.
//!
//! Complex products go straight to `cblas_zgemm`; ndarray's `dot` does not
//! dispatch complex element types to BLAS and is an order of magnitude slower
//! at the sizes used here. Eigendecompositions use LAPACK through
//! `ndarray-linalg`.

use cblas_sys::{CBLAS_LAYOUT, CBLAS_TRANSPOSE};
use ndarray::{Array1, Array2, ArrayView2, ShapeBuilder, Zip};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::Result;

pub type CMat = Array2<C64>;

pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    None,
    Adjoint,
}

impl Op {
    fn cblas(self) -> CBLAS_TRANSPOSE {
        match self {
            Op::None => CBLAS_TRANSPOSE::CblasNoTrans,
            Op::Adjoint => CBLAS_TRANSPOSE::CblasConjTrans,
        }
    }
}

/// `c <- alpha * op(a) * op(b) + beta * c` for square row-major matrices.
pub fn gemm_into(alpha: C64, a: &CMat, op_a: Op, b: &CMat, op_b: Op, beta: C64, c: &mut CMat) {
    let n = a.nrows();
    assert!(
        a.ncols() == n && b.dim() == (n, n) && c.dim() == (n, n),
        "gemm: operands must be square and of equal size"
    );
    let a = a.as_standard_layout();
    let b = b.as_standard_layout();
    assert!(c.is_standard_layout(), "gemm: output must be row-major");
    let n = n as i32;
    // SAFETY: all three buffers are contiguous row-major n x n arrays and
    // Complex<f64> has the same layout as the interleaved double pairs zgemm reads.
    unsafe {
        cblas_sys::cblas_zgemm(
            CBLAS_LAYOUT::CblasRowMajor,
            op_a.cblas(),
            op_b.cblas(),
            n,
            n,
            n,
            &alpha as *const C64 as *const _,
            a.as_ptr() as *const _,
            n,
            b.as_ptr() as *const _,
            n,
            &beta as *const C64 as *const _,
            c.as_mut_ptr() as *mut _,
            n,
        );
    }
}

pub fn gemm(a: &CMat, op_a: Op, b: &CMat, op_b: Op) -> CMat {
    let mut c = CMat::zeros(a.dim());
    gemm_into(ONE, a, op_a, b, op_b, ZERO, &mut c);
    c
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    gemm(a, Op::None, b, Op::None)
}

pub fn adjoint(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

/// `(a + a^dagger) / 2`
pub fn hermitian_part(a: &CMat) -> CMat {
    let mut out = a.clone();
    symmetrize_in_place(&mut out);
    out
}

/// Replaces `a` by its Hermitian part and returns the largest entry of the
/// removed anti-Hermitian part.
pub fn symmetrize_in_place(a: &mut CMat) -> f64 {
    let n = a.nrows();
    let mut removed = 0.0f64;
    for i in 0..n {
        let d = a[[i, i]];
        removed = removed.max(d.im.abs());
        a[[i, i]] = C64::new(d.re, 0.0);
        for j in (i + 1)..n {
            let upper = a[[i, j]];
            let lower = a[[j, i]];
            let mean = (upper + lower.conj()) * 0.5;
            removed = removed.max((upper - mean).norm());
            a[[i, j]] = mean;
            a[[j, i]] = mean.conj();
        }
    }
    removed
}

/// max |a - a^dagger|
pub fn hermiticity_residual(a: &ArrayView2<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(a: &ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn max_abs_diff(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    Zip::from(a)
        .and(b)
        .fold(0.0f64, |m, x, y| m.max((x - y).norm()))
}

pub fn frobenius_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(a: &CMat) -> C64 {
    a.diag().sum()
}

/// tr(a b) without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    assert_eq!(a.dim(), b.dim());
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[[i, j]] * b[[j, i]];
        }
    }
    acc
}

pub fn identity(n: usize) -> CMat {
    CMat::from_diag_elem(n, ONE)
}

/// Column-major copy. `Eigh` on a row-major complex matrix decomposes its
/// conjugate, so LAPACK is always handed Fortran layout.
fn fortran(a: &CMat) -> CMat {
    let mut f = CMat::zeros(a.dim().f());
    f.assign(a);
    f
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending.
pub fn eigh(a: &CMat) -> Result<(Array1<f64>, CMat)> {
    let (values, vectors) = fortran(a).eigh(UPLO::Lower)?;
    Ok((values, vectors.as_standard_layout().into_owned()))
}

pub fn eigvalsh(a: &CMat) -> Result<Array1<f64>> {
    use ndarray_linalg::EigValsh;
    Ok(fortran(a).eigvalsh(UPLO::Lower)?)
}

/// `U diag(f) U^dagger` for a unitary `U` given column-wise.
pub fn reconstruct(vectors: &CMat, values: &Array1<C64>) -> CMat {
    let scaled = {
        let mut s = vectors.clone();
        for (mut col, &v) in s.columns_mut().into_iter().zip(values.iter()) {
            col.mapv_inplace(|z| z * v);
        }
        s
    };
    gemm(&scaled, Op::None, vectors, Op::Adjoint)
}

/// `a * x` for a complex vector.
pub fn matvec(a: &CMat, x: &Array1<C64>) -> Array1<C64> {
    a.dot(x)
}

/// Inner product `<x|y>` (conjugate-linear in `x`).
pub fn inner(x: &Array1<C64>, y: &Array1<C64>) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: &Array1<C64>) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: f64) -> CMat {
        CMat::from_shape_fn((n, n), |(i, j)| {
            C64::new(((i * 7 + j * 3) as f64 * seed).sin(), ((i + 2 * j) as f64 * seed).cos())
        })
    }

    fn naive(a: &CMat, b: &CMat) -> CMat {
        let n = a.nrows();
        CMat::from_shape_fn((n, n), |(i, j)| (0..n).map(|k| a[[i, k]] * b[[k, j]]).sum())
    }

    #[test]
    fn gemm_variants_match_naive_products() {
        let a = sample(9, 0.37);
        let b = sample(9, 1.13);
        let ab = naive(&a, &b);
        assert!(max_abs_diff(&matmul(&a, &b).view(), &ab.view()) < 1e-12);
        let ahb = naive(&adjoint(&a), &b);
        assert!(max_abs_diff(&gemm(&a, Op::Adjoint, &b, Op::None).view(), &ahb.view()) < 1e-12);
        let abh = naive(&a, &adjoint(&b));
        assert!(max_abs_diff(&gemm(&a, Op::None, &b, Op::Adjoint).view(), &abh.view()) < 1e-12);
    }

    #[test]
    fn gemm_accepts_transposed_views() {
        let a = sample(6, 0.5);
        let at = a.t().to_owned();
        let reversed = a.t().reversed_axes().to_owned();
        assert!(max_abs_diff(&matmul(&at, &reversed).view(), &naive(&at, &a).view()) < 1e-12);
    }

    #[test]
    fn symmetrize_reports_removed_part() {
        let mut a = sample(5, 0.9);
        let expected = hermiticity_residual(&a.view()) / 2.0;
        let removed = symmetrize_in_place(&mut a);
        assert!((removed - expected).abs() < 1e-12);
        assert_eq!(hermiticity_residual(&a.view()), 0.0);
    }

    #[test]
    fn trace_product_matches_explicit() {
        let a = sample(7, 0.2);
        let b = sample(7, 0.8);
        let direct = trace(&matmul(&a, &b));
        assert!((trace_product(&a, &b) - direct).norm() < 1e-12);
    }

    #[test]
    fn eigh_reconstructs() {
        let a = hermitian_part(&sample(8, 0.61));
        let (w, v) = eigh(&a).unwrap();
        let back = reconstruct(&v, &w.mapv(C64::from));
        assert!(max_abs_diff(&back.view(), &a.view()) < 1e-12);
        assert!(w.windows(2).into_iter().all(|p| p[0] <= p[1]));
    }
}
