//! Complex matrix products on column-major `DMatrix` storage, routed through
//! the blocked kernels of `matrixmultiply`.

use matrixmultiply::CGemmOption;
use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Op {
    /// Use the matrix as is.
    N,
    /// Use the conjugate transpose.
    H,
}

fn shape(m: &DMatrix<Complex64>, op: Op) -> (usize, usize) {
    match op {
        Op::N => (m.nrows(), m.ncols()),
        Op::H => (m.ncols(), m.nrows()),
    }
}

/// `c <- alpha op(a) op(b) + beta c`.
pub(crate) fn gemm(
    alpha: Complex64,
    a: &DMatrix<Complex64>,
    op_a: Op,
    b: &DMatrix<Complex64>,
    op_b: Op,
    beta: Complex64,
    c: &mut DMatrix<Complex64>,
) {
    let (m, k) = shape(a, op_a);
    let (kb, n) = shape(b, op_b);
    assert_eq!(k, kb, "inner dimensions differ");
    assert_eq!((c.nrows(), c.ncols()), (m, n), "output has the wrong shape");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        *c *= beta;
        return;
    }
    let conj_a;
    let conj_b;
    // Element (i, j) of a column-major r x s matrix sits at i + j r; its
    // transpose is read with the strides swapped.
    let (pa, rsa, csa) = match op_a {
        Op::N => (a.as_ptr(), 1, a.nrows() as isize),
        Op::H => {
            conj_a = a.map(|z| z.conj());
            (conj_a.as_ptr(), a.nrows() as isize, 1)
        }
    };
    let (pb, rsb, csb) = match op_b {
        Op::N => (b.as_ptr(), 1, b.nrows() as isize),
        Op::H => {
            conj_b = b.map(|z| z.conj());
            (conj_b.as_ptr(), b.nrows() as isize, 1)
        }
    };
    let ldc = c.nrows() as isize;
    // SAFETY: `Complex64` is `repr(C)` with two `f64` fields, the layout of
    // `[f64; 2]`. Pointers and strides describe the live buffers above, and
    // `c` does not alias `a` or `b` because it is borrowed mutably.
    unsafe {
        matrixmultiply::zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            n,
            [alpha.re, alpha.im],
            pa.cast(),
            rsa,
            csa,
            pb.cast(),
            rsb,
            csb,
            [beta.re, beta.im],
            c.as_mut_ptr().cast(),
            1,
            ldc,
        );
    }
}

/// `op(a) op(b)`.
pub(crate) fn mul(
    a: &DMatrix<Complex64>,
    op_a: Op,
    b: &DMatrix<Complex64>,
    op_b: Op,
) -> DMatrix<Complex64> {
    let mut c = DMatrix::zeros(shape(a, op_a).0, shape(b, op_b).1);
    gemm(
        Complex64::new(1.0, 0.0),
        a,
        op_a,
        b,
        op_b,
        Complex64::new(0.0, 0.0),
        &mut c,
    );
    c
}
