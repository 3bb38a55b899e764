use super::Matrix;
use crate::scalar::Real;

/// Kronecker tensor product `A (x) B`: the block matrix `[a_ij * B]`.
///
/// Spectra multiply across the factors: the eigenvalues of `A (x) B` are
/// the products `lambda_i * mu_j` and its singular values the products
/// `sigma_i(A) * sigma_j(B)`.
pub fn kronecker<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let (ra, ca) = (a.rows(), a.cols());
    let (rb, cb) = (b.rows(), b.cols());
    let mut out = Matrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of two column vectors.
pub fn kronecker_vec<T: Real>(u: &[T], v: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(u.len() * v.len());
    for &a in u {
        for &b in v {
            out.push(a * b);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::singular_values;

    #[test]
    fn identity_kron_identity() {
        let i2 = Matrix::<f64>::identity(2);
        assert_eq!(kronecker(&i2, &i2), Matrix::identity(4));
    }

    #[test]
    fn transpose_distributes() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = Matrix::from_rows(&[&[0.5, -1.0], &[2.0, 0.25]]);
        let lhs = kronecker(&a, &b).transpose();
        let rhs = kronecker(&a.transpose(), &b.transpose());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn mixed_product_rule() {
        let a1 = Matrix::from_rows(&[&[0.2, 0.7], &[-0.4, 0.9]]);
        let a2 = Matrix::from_rows(&[&[1.1, -0.3], &[0.6, 0.8]]);
        let b1 = Matrix::from_rows(&[&[0.5, 0.1], &[-0.2, 1.3]]);
        let b2 = Matrix::from_rows(&[&[0.9, 0.4], &[0.3, -0.7]]);
        let lhs = kronecker(&a1, &b1).mul(&kronecker(&a2, &b2));
        let rhs = kronecker(&a1.mul(&a2), &b1.mul(&b2));
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn singular_values_multiply() {
        let a = Matrix::from_rows(&[&[1.0, 3.0], &[0.0, 1.0]]);
        let b = Matrix::from_rows(&[&[0.8, -0.1], &[0.4, 0.9]]);
        let sa = singular_values(&a).unwrap().values;
        let sb = singular_values(&b).unwrap().values;
        let mut expected: Vec<f64> = sa
            .iter()
            .flat_map(|&x| sb.iter().map(move |&y| x * y))
            .collect();
        expected.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let got = singular_values(&kronecker(&a, &b)).unwrap().values;
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() <= 1e-10 * e.max(1.0), "{g} vs {e}");
        }
    }
}
