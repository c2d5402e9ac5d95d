//! Dense complex linear algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const J: C64 = C64 { re: 0.0, im: 1.0 };

/// `e^{j theta}`
#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Kronecker product `a ⊗ b`; block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let s = a[(i, j)];
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            let mut block = out.view_mut((i * br, j * bc), (br, bc));
            block.zip_apply(b, |o, v| *o = s * v);
        }
    }
    out
}

/// Add `scale * (a ⊗ b)` into `out` in place.
pub fn kron_accumulate(out: &mut CMatrix, a: &CMatrix, b: &CMatrix) {
    let (br, bc) = b.shape();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let s = a[(i, j)];
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            let mut block = out.view_mut((i * br, j * bc), (br, bc));
            block.zip_apply(b, |o, v| *o += s * v);
        }
    }
}

/// Normalized `n`-point DFT matrix, `F[k, m] = e^{-j 2π k m / n} / √n`.
pub fn dft_matrix(n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |k, m| {
        let e = ((k * m) % n) as f64;
        cis(-2.0 * std::f64::consts::PI * e / n as f64) * scale
    })
}

/// Dense diagonal matrix from a slice.
pub fn diag(entries: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(entries))
}

pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Principal square root of a real symmetric PSD matrix. Negative
/// eigenvalues (numerical indefiniteness) are clamped to zero; the number of
/// clamped eigenvalues is returned alongside the root.
pub fn symmetric_psd_sqrt(r: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let eig = SymmetricEigen::new(r.clone());
    let mut clamped = 0;
    let roots = eig.eigenvalues.map(|l| {
        if l < 0.0 {
            clamped += 1;
            0.0
        } else {
            l.sqrt()
        }
    });
    let q = &eig.eigenvectors;
    let root = q * DMatrix::from_diagonal(&roots) * q.transpose();
    (root, clamped)
}

/// Largest over smallest singular value; `inf` when the smallest is zero.
pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| C64::new(v, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_block_layout() {
        let a = CMatrix::from_row_slice(2, 1, &[C64::new(1.0, 0.0), C64::new(0.0, 2.0)]);
        let b = CMatrix::from_row_slice(1, 2, &[C64::new(3.0, 0.0), C64::new(4.0, 0.0)]);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (2, 2));
        assert_eq!(k[(0, 1)], C64::new(4.0, 0.0));
        assert_eq!(k[(1, 0)], C64::new(0.0, 6.0));

        let mut acc = CMatrix::zeros(2, 2);
        kron_accumulate(&mut acc, &a, &b);
        kron_accumulate(&mut acc, &a, &b);
        assert_eq!(acc, k.scale(2.0));
    }

    #[test]
    fn dft_is_unitary() {
        let f = dft_matrix(12);
        let err = (f.adjoint() * &f - CMatrix::identity(12, 12)).norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let r = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let (s, clamped) = symmetric_psd_sqrt(&r);
        assert_eq!(clamped, 0);
        assert!((&s * &s - &r).norm() < 1e-12);
    }

    #[test]
    fn psd_sqrt_clamps_indefinite() {
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let (_, clamped) = symmetric_psd_sqrt(&r);
        assert_eq!(clamped, 1);
    }
}
