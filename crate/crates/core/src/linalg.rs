//! Dense complex linear algebra helpers used throughout the library.
//!
//! Composite indices follow the convention `i = i1 * d2 + i2` for a tensor
//! product of dimensions `(d1, d2)`: the first factor is the major index.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = Complex::new(0.0, 0.0);
pub const ONE: C64 = Complex::new(1.0, 0.0);

#[inline]
pub fn re(x: f64) -> C64 {
    Complex::new(x, 0.0)
}

#[inline]
pub fn im(x: f64) -> C64 {
    Complex::new(0.0, x)
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// (A + A†) / 2.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * re(0.5)
}

pub fn trace(m: &CMat) -> C64 {
    let mut t = ZERO;
    for i in 0..m.nrows().min(m.ncols()) {
        t += m[(i, i)];
    }
    t
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is symmetrized first so that accumulated round-off in the
/// anti-Hermitian part cannot poison the decomposition.
pub fn eigh(m: &CMat) -> (DVector<f64>, CMat) {
    let h = hermitize(m);
    let se = h.symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let mut vecs = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Apply a real function to the eigenvalues of a Hermitian matrix.
pub fn herm_fn(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(m);
    let n = vals.len();
    let d = CMat::from_fn(n, n, |i, j| if i == j { re(f(vals[i])) } else { ZERO });
    &vecs * d * vecs.adjoint()
}

/// PSD square root; small negative eigenvalues are clamped to zero.
pub fn sqrtm_psd(m: &CMat) -> CMat {
    herm_fn(m, |x| if x > 0.0 { x.sqrt() } else { 0.0 })
}

/// Inverse square root on the support, eigenvalues below `cutoff` dropped.
///
/// Returns the pseudo-inverse square root and the number of dropped
/// directions.
pub fn pinv_sqrt(m: &CMat, cutoff: f64) -> (CMat, usize) {
    let (vals, vecs) = eigh(m);
    let n = vals.len();
    let mut dropped = 0;
    let d = CMat::from_fn(n, n, |i, j| {
        if i == j {
            if vals[i] > cutoff {
                re(1.0 / vals[i].sqrt())
            } else {
                dropped += 1;
                ZERO
            }
        } else {
            ZERO
        }
    });
    (&vecs * d * vecs.adjoint(), dropped)
}

/// Projection onto the PSD cone by eigenvalue clipping.
pub fn psd_project(m: &CMat) -> CMat {
    herm_fn(m, |x| x.max(0.0))
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    let (vals, _) = eigh(m);
    vals[0]
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Eigendecomposition of a real symmetric tridiagonal matrix by the
/// implicit-shift QL algorithm. `diag` has length n, `off` length n−1.
/// Returns ascending eigenvalues and the orthogonal eigenvector matrix.
///
/// Runs in O(n²), which matters because the beam-splitter construction
/// does one of these per photon-number sector.
pub fn sym_tridiag_eigen(diag: &[f64], off: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let n = diag.len();
    assert_eq!(off.len() + 1, n);
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = DMatrix::<f64>::identity(n, n);

    for l in 0..n {
        let mut iter = 0;
        loop {
            // find the first subdiagonal negligible element at or after l
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "tridiagonal QL failed to converge");
            // Wilkinson shift
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                // accumulate the rotation into the eigenvector matrix
                for k in 0..n {
                    f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // sort ascending, permuting eigenvector columns to match
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let vals: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vecs = DMatrix::<f64>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &z.column(i));
    }
    (vals, vecs)
}

/// Trace out the second factor of a `(d1 ⊗ d2)` operator, leaving `d1 × d1`.
pub fn ptrace_second(m: &CMat, d1: usize, d2: usize) -> CMat {
    debug_assert_eq!(m.nrows(), d1 * d2);
    let mut out = CMat::zeros(d1, d1);
    for i in 0..d1 {
        for j in 0..d1 {
            let mut s = ZERO;
            for k in 0..d2 {
                s += m[(i * d2 + k, j * d2 + k)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// Trace out the first factor of a `(d1 ⊗ d2)` operator, leaving `d2 × d2`.
pub fn ptrace_first(m: &CMat, d1: usize, d2: usize) -> CMat {
    debug_assert_eq!(m.nrows(), d1 * d2);
    let mut out = CMat::zeros(d2, d2);
    for i in 0..d2 {
        for j in 0..d2 {
            let mut s = ZERO;
            for k in 0..d1 {
                s += m[(k * d2 + i, k * d2 + j)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// |i⟩⟨j| block of a `(d1 ⊗ d2)` operator: rows/cols with first index (i, j).
pub fn block(m: &CMat, d2: usize, i: usize, j: usize) -> CMat {
    m.view((i * d2, j * d2), (d2, d2)).into()
}
