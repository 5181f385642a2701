//! Small dense linear algebra: cyclic Jacobi for real symmetric matrices and
//! the complex helpers the Born-rule optimizers need.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: DMatrix<f64>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
///
/// Only the upper triangle of `m` is read.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> SymmetricEigen {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let mut a = DMatrix::from_fn(n, n, |i, j| if i <= j { m[(i, j)] } else { m[(j, i)] });
    let mut v = DMatrix::<f64>::identity(n, n);

    let scale = a
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymmetricEigen { values, vectors }
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    jacobi_eigen(m).values[0]
}

/// Largest eigenvalue of a Hermitian matrix and a unit eigenvector.
///
/// Uses the real embedding `[[Re, -Im], [Im, Re]]`, whose spectrum is the
/// Hermitian spectrum with every eigenvalue doubled.
pub fn hermitian_top(h: &DMatrix<C64>) -> (f64, DVector<C64>) {
    let n = h.nrows();
    let emb = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, ri) = (i / n, i % n);
        let (bj, rj) = (j / n, j % n);
        let z = h[(ri, rj)];
        match (bi, bj) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    });
    let eig = jacobi_eigen(&emb);
    let k = 2 * n - 1;
    let col = eig.vectors.column(k);
    let mut vec = DVector::from_fn(n, |i, _| C64::new(col[i], col[n + i]));
    let norm = vec.norm();
    vec /= C64::new(norm, 0.0);
    (eig.values[k], vec)
}

/// Orthonormal basis (as columns) of the complement of `span(vectors)` in C^n.
pub fn orthonormal_complement(vectors: &[DVector<C64>], n: usize) -> DMatrix<C64> {
    let mut basis: Vec<DVector<C64>> = Vec::new();
    for v in vectors {
        push_orthogonalized(&mut basis, v.clone());
    }
    let constrained = basis.len();
    for k in 0..n {
        let mut e = DVector::from_element(n, C64::new(0.0, 0.0));
        e[k] = C64::new(1.0, 0.0);
        push_orthogonalized(&mut basis, e);
        if basis.len() == n {
            break;
        }
    }
    let free = &basis[constrained..];
    DMatrix::from_fn(n, free.len(), |r, c| free[c][r])
}

fn push_orthogonalized(basis: &mut Vec<DVector<C64>>, mut v: DVector<C64>) {
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for b in basis.iter() {
            let proj = b.dotc(&v);
            v -= b * proj;
        }
    }
    let norm = v.norm();
    if norm > 1e-10 {
        basis.push(v / C64::new(norm, 0.0));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonalizes() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, -2.0, 1.0, 2.0, 0.5, -2.0, 0.5, 3.0]);
        let eig = jacobi_eigen(&m);
        for k in 0..3 {
            let v = eig.vectors.column(k);
            let r = &m * v - v * eig.values[k];
            assert!(r.norm() < 1e-12);
        }
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let trace: f64 = eig.values.iter().sum();
        assert!((trace - 9.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!((min_eigenvalue(&m) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn hermitian_top_of_sigma_y() {
        let i = C64::new(0.0, 1.0);
        let h = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), -i, i, C64::new(0.0, 0.0)]);
        let (val, vec) = hermitian_top(&h);
        assert!((val - 1.0).abs() < 1e-14);
        let r = &h * &vec - &vec * C64::new(val, 0.0);
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn complement_is_orthogonal() {
        let v = DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ]);
        let dup = v.clone() * C64::new(2.0, 0.0);
        let q = orthonormal_complement(&[v.clone(), dup], 3);
        assert_eq!(q.ncols(), 2);
        for c in 0..2 {
            assert!(v.dotc(&q.column(c).into_owned()).norm() < 1e-14);
        }
        let gram = q.adjoint() * &q;
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-13);
    }
}
