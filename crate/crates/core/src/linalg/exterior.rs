//! Exterior powers of small matrices.
//!
//! `A^{(k)}` acts on `wedge^k R^d`; in the lexicographic basis
//! `e_{i1} ^ ... ^ e_{ik}` (i1 < ... < ik) its matrix entries are the k x k
//! minors of `A`. The norm identity `|A^{(k)}| = sigma_1(A) ... sigma_k(A)`
//! and the eigenvalue products are what the higher-order proximality and
//! irreducibility certificates run on.

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// All k-element subsets of `0..d` in lexicographic order.
pub(crate) fn k_subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + d - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Determinant of the submatrix of `a` on `rows` x `cols`, by cofactor
/// expansion along the first row.
fn minor<T: Real>(a: &Matrix<T>, rows: &[usize], cols: &[usize]) -> T {
    let k = rows.len();
    match k {
        1 => a[(rows[0], cols[0])],
        2 => {
            a[(rows[0], cols[0])] * a[(rows[1], cols[1])]
                - a[(rows[0], cols[1])] * a[(rows[1], cols[0])]
        }
        3 => {
            let m = |i: usize, j: usize| a[(rows[i], cols[j])];
            m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
        }
        _ => {
            let sub_rows = &rows[1..];
            let mut acc = T::zero();
            let mut sign = T::one();
            for (drop, &c) in cols.iter().enumerate() {
                let sub_cols: Vec<usize> = cols
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != drop)
                    .map(|(_, &x)| x)
                    .collect();
                acc += sign * a[(rows[0], c)] * minor(a, sub_rows, &sub_cols);
                sign = -sign;
            }
            acc
        }
    }
}

/// The matrix of `A^{(k)}` in the lexicographic wedge basis:
/// entry (I, J) is the minor of `A` on rows I and columns J.
pub fn exterior_power<T: Real>(a: &Matrix<T>, k: usize) -> Result<Matrix<T>> {
    a.ensure_square_finite("exterior_power")?;
    let d = a.rows();
    if k < 1 || k > d {
        return Err(Error::Domain(format!(
            "exterior power order k={k} out of range 1..={d}"
        )));
    }
    let subsets = k_subsets(d, k);
    let n = subsets.len();
    let mut out = Matrix::zeros(n, n);
    for (i, rows) in subsets.iter().enumerate() {
        for (j, cols) in subsets.iter().enumerate() {
            out[(i, j)] = minor(a, rows, cols);
        }
    }
    Ok(out)
}
