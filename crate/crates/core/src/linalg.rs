// SPDX-License-Identifier: Apache-2.0

//! Small dense complex matrices for two-qubit work.
//!
//! Basis ordering is `|00>, |01>, |10>, |11>` with qubit 1 as the most
//! significant bit and `σᶻ|0> = +|0>`.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex;

use crate::scalar::{lit, Scalar};

pub type Mat2<T> = Matrix2<Complex<T>>;
pub type Mat4<T> = Matrix4<Complex<T>>;
pub type Ket<T> = Vector4<Complex<T>>;

#[inline]
pub fn re<T: Scalar>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// `exp(iθ)`.
#[inline]
pub fn cis<T: Scalar>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

#[inline]
pub fn modulus<T: Scalar>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

pub fn kron<T: Scalar>(a: &Mat2<T>, b: &Mat2<T>) -> Mat4<T> {
    Mat4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// Largest entry modulus.
pub fn max_abs<T: Scalar>(m: &Mat4<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(modulus(*z)))
}

/// `max |U†U − 1|`.
pub fn unitarity_defect<T: Scalar>(u: &Mat4<T>) -> T {
    max_abs(&(u.adjoint() * u - Mat4::identity()))
}

/// Nearest-unitary cleanup by modified Gram-Schmidt on the columns. Keeps
/// long products of unitaries from drifting in low precision.
pub fn orthonormalize<T: Scalar>(u: &Mat4<T>) -> Mat4<T> {
    let mut q = *u;
    for j in 0..4 {
        for k in 0..j {
            let proj = q.column(k).dotc(&q.column(j));
            let qk = q.column(k).into_owned();
            let mut col = q.column_mut(j);
            col -= qk * proj;
        }
        let norm = q.column(j).norm();
        let mut col = q.column_mut(j);
        col /= re(norm);
    }
    q
}

pub fn is_hermitian<T: Scalar>(m: &Mat4<T>, tol: T) -> bool {
    max_abs(&(m - m.adjoint())) <= tol
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen<T: Scalar>(m: &Mat4<T>) -> (Vector4<T>, Mat4<T>) {
    let eig = SymmetricEigen::new(*m);
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = Vector4::from_fn(|i, _| eig.eigenvalues[order[i]]);
    let vectors = Mat4::from_fn(|r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `exp(−i·tau·H)` for Hermitian `H`.
pub fn expm_hermitian<T: Scalar>(h: &Mat4<T>, tau: T) -> Mat4<T> {
    let (values, vectors) = hermitian_eigen(h);
    let phases = Mat4::from_diagonal(&Vector4::from_fn(|i, _| cis(-tau * values[i])));
    vectors * phases * vectors.adjoint()
}

/// Principal square root of a positive semidefinite Hermitian matrix;
/// negative eigenvalues are clamped to zero.
pub fn sqrt_psd<T: Scalar>(m: &Mat4<T>) -> Mat4<T> {
    let (values, vectors) = hermitian_eigen(m);
    let roots = Mat4::from_diagonal(&Vector4::from_fn(|i, _| re(values[i].max(T::zero()).sqrt())));
    vectors * roots * vectors.adjoint()
}

/// `½‖A − B‖₁` for Hermitian `A`, `B`.
pub fn trace_distance<T: Scalar>(a: &Mat4<T>, b: &Mat4<T>) -> T {
    let (values, _) = hermitian_eigen(&(a - b));
    values.iter().fold(T::zero(), |acc, v| acc + v.abs()) * lit(0.5)
}

/// Minimum over unit phases `φ` of `max |U − φV|`.
///
/// The least-squares phase `arg Tr(V†U)` seeds a golden-section search on
/// a window around it.
pub fn phase_distance<T: Scalar>(u: &Mat4<T>, v: &Mat4<T>) -> T {
    let overlap = (v.adjoint() * u).trace();
    let seed = if modulus(overlap) > T::zero() {
        overlap.im.atan2(overlap.re)
    } else {
        T::zero()
    };
    let dist = |phi: T| max_abs(&(u - v * cis(phi)));
    let (best, _) = golden_max(|phi| -dist(phi), seed - lit(0.5), seed + lit(0.5), lit(1e-12));
    dist(best).min(dist(seed))
}

/// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
/// Returns the argmax and the maximum.
pub fn golden_max<T: Scalar, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T, tol: T) -> (T, T) {
    let inv_phi: T = lit(0.618_033_988_749_894_8);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
