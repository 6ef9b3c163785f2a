//! Small dense complex linear algebra.
//!
//! The 4x4 steady-state systems are solved many thousands of times inside the
//! optimisers, so they go through a stack-allocated Gaussian elimination
//! rather than a heap-backed decomposition. Eigenproblems and the large
//! Liouvillian solves are delegated to `faer`.

use faer::{Mat, Side};
use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot falls below `N * eps * max|a_ij|`.
#[allow(clippy::needless_range_loop)]
pub fn solve<const N: usize>(a: &[[C64; N]; N], b: &[C64; N]) -> Option<[C64; N]> {
    let mut m = *a;
    let mut x = *b;
    let scale = max_abs(a);
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let tiny = N as f64 * f64::EPSILON * scale;

    for col in 0..N {
        let (piv, piv_abs) = (col..N)
            .map(|r| (r, m[r][col].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs <= tiny {
            return None;
        }
        if piv != col {
            m.swap(piv, col);
            x.swap(piv, col);
        }
        let inv = m[col][col].inv();
        for r in (col + 1)..N {
            let factor = m[r][col] * inv;
            if factor == ZERO {
                continue;
            }
            for c in col..N {
                let v = m[col][c];
                m[r][c] -= factor * v;
            }
            let v = x[col];
            x[r] -= factor * v;
        }
    }
    for row in (0..N).rev() {
        let mut acc = x[row];
        for c in (row + 1)..N {
            acc -= m[row][c] * x[c];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

pub fn mat_vec<const N: usize>(a: &[[C64; N]; N], x: &[C64; N]) -> [C64; N] {
    let mut out = [ZERO; N];
    for (o, row) in out.iter_mut().zip(a) {
        *o = row.iter().zip(x).map(|(aij, xj)| aij * xj).sum();
    }
    out
}

pub fn max_abs<const N: usize>(a: &[[C64; N]; N]) -> f64 {
    a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius<const N: usize>(a: &[[C64; N]; N]) -> f64 {
    a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn to_faer<const N: usize>(a: &[[C64; N]; N]) -> Mat<C64> {
    Mat::from_fn(N, N, |i, j| a[i][j])
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// Eigenvalues are ascending; `vectors[k]` is the unit eigenvector of
/// `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEigen<const N: usize> {
    pub values: [f64; N],
    pub vectors: [[C64; N]; N],
}

pub fn hermitian_eigen<const N: usize>(a: &[[C64; N]; N]) -> Option<HermitianEigen<N>> {
    let m = to_faer(a);
    let evd = m.self_adjoint_eigen(Side::Lower).ok()?;
    let s = evd.S();
    let u = evd.U();
    let mut values = [0.0; N];
    let mut vectors = [[ZERO; N]; N];
    for k in 0..N {
        values[k] = s[k].re;
        for i in 0..N {
            vectors[k][i] = u[(i, k)];
        }
    }
    Some(HermitianEigen { values, vectors })
}

/// Eigenvalues of a general complex matrix, sorted by real part.
pub fn general_eigenvalues<const N: usize>(a: &[[C64; N]; N]) -> Option<[C64; N]> {
    let m = to_faer(a);
    let mut vals = m.eigenvalues().ok()?;
    vals.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let mut out = [ZERO; N];
    out.copy_from_slice(&vals);
    Some(out)
}

/// Ascending eigenvalues of a Hermitian matrix held in a `faer` matrix.
pub fn hermitian_eigenvalues_dyn(a: &Mat<C64>) -> Option<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower).ok()
}
