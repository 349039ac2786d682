//! Small dense eigensolvers used by the spectral analysis, the exponential
//! propagator and the physicality checks.

use crate::scalar::{Cplx, Real};

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub n: usize,
    /// Ascending eigenvalues.
    pub values: Vec<T>,
    /// Row-major matrix whose column `k` is the eigenvector of `values[k]`.
    pub vectors: Vec<T>,
}

impl<T: Real> SymmetricEigen<T> {
    pub fn vector(&self, k: usize) -> Vec<T> {
        (0..self.n).map(|i| self.vectors[i * self.n + k]).collect()
    }

    /// `V f(L) V^T` for a scalar function `f`, row-major.
    pub fn map(&self, f: impl Fn(T) -> T) -> Vec<T> {
        let n = self.n;
        let fl: Vec<T> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let mut acc = T::zero();
                for k in 0..n {
                    acc += self.vectors[i * n + k] * fl[k] * self.vectors[j * n + k];
                }
                out[i * n + j] = acc;
                out[j * n + i] = acc;
            }
        }
        out
    }
}

/// Cyclic Jacobi eigen-decomposition of the symmetric row-major `n x n`
/// matrix `a`. Only the upper triangle is read.
pub fn symmetric_eigen<T: Real>(a: &[T], n: usize) -> SymmetricEigen<T> {
    assert_eq!(a.len(), n * n, "matrix must be n x n");
    let mut m: Vec<T> = a.to_vec();
    for i in 0..n {
        for j in 0..i {
            m[i * n + j] = m[j * n + i];
        }
    }
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let two = T::lit(2.0);
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag += m[i * n + i] * m[i * n + i];
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() || off < T::min_positive_value() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = cs * mkp - sn * mkq;
                    m[k * n + q] = sn * mkp + cs * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = cs * mpk - sn * mqk;
                    m[q * n + k] = sn * mpk + cs * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = cs * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| m[k * n + k]).collect();
    let mut vectors = vec![T::zero(); n * n];
    for (newk, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + newk] = v[i * n + k];
        }
    }
    SymmetricEigen { n, values, vectors }
}

/// Real symmetric `2n x 2n` embedding `[[X, -Y], [Y, X]]` of the Hermitian
/// matrix `X + iY`. Each eigenvalue of the Hermitian matrix appears twice.
pub fn hermitian_embedding<T: Real>(h: &[Cplx<T>], n: usize) -> Vec<T> {
    let m = 2 * n;
    let mut out = vec![T::zero(); m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[i * n + j];
            out[i * m + j] = z.re;
            out[(i + n) * m + (j + n)] = z.re;
            out[i * m + (j + n)] = -z.im;
            out[(i + n) * m + j] = z.im;
        }
    }
    out
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues<T: Real>(h: &[Cplx<T>], n: usize) -> Vec<T> {
    let e = symmetric_eigen(&hermitian_embedding(h, n), 2 * n);
    e.values.chunks(2).map(|p| (p[0] + p[1]) / T::lit(2.0)).collect()
}

/// `exp(-i K)` for a Hermitian `K`, evaluated as `cos K - i sin K` through the
/// real embedding so the result is unitary to rounding.
pub fn unitary_exp<T: Real>(k: &[Cplx<T>], n: usize) -> Vec<Cplx<T>> {
    let e = symmetric_eigen(&hermitian_embedding(k, n), 2 * n);
    let cos = e.map(|l| l.cos());
    let sin = e.map(|l| l.sin());
    let m = 2 * n;
    let mut out = vec![Cplx::new(T::zero(), T::zero()); n * n];
    for i in 0..n {
        for j in 0..n {
            // f(X + iY) embeds as [[Re, -Im], [Im, Re]].
            let cz = Cplx::new(cos[i * m + j], cos[(i + n) * m + j]);
            let sz = Cplx::new(sin[i * m + j], sin[(i + n) * m + j]);
            out[i * n + j] = cz - Cplx::new(T::zero(), T::one()) * sz;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonalizes_symmetric_tridiagonal() {
        let s = 1.0 / 2.0;
        let a: [f64; 9] = [0.0, s, 0.0, s, 0.0, s, 0.0, s, 0.0];
        let e = symmetric_eigen(&a, 3);
        let r = 1.0 / 2f64.sqrt();
        assert_relative_eq!(e.values[0], -r, epsilon = 1e-14);
        assert_relative_eq!(e.values[1], 0.0, epsilon = 1e-14);
        assert_relative_eq!(e.values[2], r, epsilon = 1e-14);
    }

    #[test]
    fn eigenvectors_reconstruct_matrix() {
        let a: [f64; 16] = [4.0, 1.0, -2.0, 0.5, 1.0, 3.0, 0.0, 1.5, -2.0, 0.0, 1.0, 0.2, 0.5, 1.5, 0.2, -1.0];
        let e = symmetric_eigen(&a, 4);
        let back = e.map(|l| l);
        for (x, y) in back.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        for k in 0..3 {
            assert!(e.values[k] <= e.values[k + 1]);
        }
    }

    #[test]
    fn hermitian_spectrum_of_pauli_y() {
        let z = Cplx::new(0.0, 0.0);
        let h = [z, Cplx::new(0.0, -1.0), Cplx::new(0.0, 1.0), z];
        let ev = hermitian_eigenvalues(&h, 2);
        assert_relative_eq!(ev[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(ev[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn exponential_of_pauli_x_is_rotation() {
        let z = Cplx::new(0.0, 0.0);
        let o = Cplx::new(0.3, 0.0);
        let u = unitary_exp(&[z, o, o, z], 2);
        assert_relative_eq!(u[0].re, 0.3f64.cos(), epsilon = 1e-14);
        assert_relative_eq!(u[1].im, -(0.3f64.sin()), epsilon = 1e-14);
        assert_relative_eq!(u[2].im, -(0.3f64.sin()), epsilon = 1e-14);
    }

    #[test]
    fn single_precision_solver() {
        let e = symmetric_eigen(&[2.0f32, 1.0, 1.0, 2.0], 2);
        assert!((e.values[0] - 1.0).abs() < 1e-6);
        assert!((e.values[1] - 3.0).abs() < 1e-6);
    }
}
