//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! Columns of the working copy are rotated until mutually orthogonal; the
//! column norms are then the singular values. Unconditionally accurate at
//! the dimensions used here (d <= 8), and deterministic: a fixed sweep
//! order and a stable descending sort of the spectrum.

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::{real, Real};
use serde::{Deserialize, Serialize};

/// Non-increasing singular values of a square matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularSpectrum<T> {
    pub values: Vec<T>,
}

pub struct Svd<T> {
    pub u: Matrix<T>,
    pub sigma: Vec<T>,
    pub v: Matrix<T>,
}

const MAX_SWEEPS: usize = 64;

/// Jacobi sweeps on the columns of `a`, optionally accumulating the
/// right-rotation matrix `v`. On return the columns of `a` are orthogonal.
fn jacobi_sweeps<T: Real>(a: &mut Matrix<T>, mut v: Option<&mut Matrix<T>>) -> Result<()> {
    let d = a.rows();
    // Off-diagonal mass threshold: 1e-13 relative, floored at a few ulps so
    // f32 inputs still terminate.
    let tol = real::<T>(1e-13).max(T::epsilon() * real::<T>(8.0));
    // Columns whose norm has collapsed to rounding noise are numerically
    // zero; rotating against them cannot converge under a relative test.
    let total_sq = a
        .data()
        .iter()
        .map(|&x| x * x)
        .fold(T::zero(), |x, y| x + y);
    let dead = T::epsilon() * T::epsilon() * total_sq;

    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..d {
            for q in p + 1..d {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = T::zero();
                for i in 0..d {
                    let ap = a[(i, p)];
                    let aq = a[(i, q)];
                    alpha += ap * ap;
                    beta += aq * aq;
                    gamma += ap * aq;
                }
                if alpha <= dead || beta <= dead {
                    continue;
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = if zeta >= T::zero() {
                    T::one() / (zeta + (T::one() + zeta * zeta).sqrt())
                } else {
                    -T::one() / (-zeta + (T::one() + zeta * zeta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..d {
                    let ap = a[(i, p)];
                    let aq = a[(i, q)];
                    a[(i, p)] = c * ap - s * aq;
                    a[(i, q)] = s * ap + c * aq;
                }
                if let Some(v) = v.as_deref_mut() {
                    for i in 0..d {
                        let vp = v[(i, p)];
                        let vq = v[(i, q)];
                        v[(i, p)] = c * vp - s * vq;
                        v[(i, q)] = s * vp + c * vq;
                    }
                }
            }
        }
        if !rotated {
            return Ok(());
        }
        sweeps += 1;
        if sweeps > MAX_SWEEPS {
            return Err(Error::Numerical(format!(
                "jacobi svd did not converge within {MAX_SWEEPS} sweeps"
            )));
        }
    }
}

/// Largest column norm times machine epsilon: singular values at or below
/// this are indistinguishable from zero and reported as exact zeros, which
/// is what the rank logic and the vanishing branch of the singular value
/// function rely on.
fn zero_cutoff<T: Real>(sigma: &[T]) -> T {
    let top = sigma.iter().copied().fold(T::zero(), T::max);
    T::epsilon() * real::<T>(8.0) * top
}

/// Full SVD `M = U diag(sigma) V^T` with `sigma` non-increasing.
pub fn svd<T: Real>(m: &Matrix<T>) -> Result<Svd<T>> {
    m.ensure_square_finite("svd")?;
    let d = m.rows();
    let mut a = m.clone();
    let mut v = Matrix::identity(d);
    jacobi_sweeps(&mut a, Some(&mut v))?;

    let mut sigma = vec![T::zero(); d];
    let mut u = Matrix::zeros(d, d);
    for j in 0..d {
        let mut norm = T::zero();
        for i in 0..d {
            norm += a[(i, j)] * a[(i, j)];
        }
        let norm = norm.sqrt();
        sigma[j] = norm;
        if norm > T::zero() {
            for i in 0..d {
                u[(i, j)] = a[(i, j)] / norm;
            }
        }
    }
    let cutoff = zero_cutoff(&sigma);
    for s in sigma.iter_mut() {
        if *s <= cutoff {
            *s = T::zero();
        }
    }

    // Stable descending sort of the spectrum, permuting U and V with it.
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).expect("finite sigma"));
    let sigma_sorted: Vec<T> = order.iter().map(|&j| sigma[j]).collect();
    let u_sorted = Matrix::from_fn(d, d, |i, j| u[(i, order[j])]);
    let v_sorted = Matrix::from_fn(d, d, |i, j| v[(i, order[j])]);

    Ok(Svd {
        u: u_sorted,
        sigma: sigma_sorted,
        v: v_sorted,
    })
}

/// All singular values of a square matrix, non-increasing. Skips the
/// U/V accumulation, so this is the entry point for the level-sum loops.
pub fn singular_values<T: Real>(m: &Matrix<T>) -> Result<SingularSpectrum<T>> {
    m.ensure_square_finite("svd")?;
    let d = m.rows();
    let mut a = m.clone();
    jacobi_sweeps(&mut a, None)?;
    let mut sigma = vec![T::zero(); d];
    for j in 0..d {
        let mut norm = T::zero();
        for i in 0..d {
            norm += a[(i, j)] * a[(i, j)];
        }
        sigma[j] = norm.sqrt();
    }
    let cutoff = zero_cutoff(&sigma);
    for s in sigma.iter_mut() {
        if *s <= cutoff {
            *s = T::zero();
        }
    }
    sigma.sort_by(|x, y| y.partial_cmp(x).expect("finite sigma"));
    Ok(SingularSpectrum { values: sigma })
}
