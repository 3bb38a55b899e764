//! Real eigensolver: balancing, Householder reduction to Hessenberg form,
//! and implicit double-shift (Francis) QR iteration. Complex conjugate
//! pairs are read off the final 2x2 Schur blocks. Eigenvectors, when
//! requested, come from inverse iteration on the original matrix and are
//! returned only for simple eigenvalues.

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::{real, Real};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Eigenvalues sorted by non-increasing modulus (ties by non-decreasing
/// argument), optionally with unit eigenvectors for the simple ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenSpectrum<T> {
    pub values: Vec<Complex<T>>,
    /// `None` when vectors were not requested; inner `None` marks an
    /// eigenvalue that is not numerically simple.
    pub vectors: Option<Vec<Option<Vec<Complex<T>>>>>,
}

impl<T: Real> EigenSpectrum<T> {
    /// Moduli of the eigenvalues, non-increasing.
    pub fn moduli(&self) -> Vec<T> {
        self.values.iter().map(|z| z.norm()).collect()
    }
}

const MAX_DIM: usize = 8;

pub fn eigen<T: Real>(m: &Matrix<T>, want_vectors: bool) -> Result<EigenSpectrum<T>> {
    m.ensure_square_finite("eigen")?;
    let d = m.rows();
    if d > MAX_DIM {
        return Err(Error::Domain(format!(
            "eigen supports dimension <= {MAX_DIM}, got {d}"
        )));
    }

    let mut values = if d == 1 {
        vec![Complex::new(m[(0, 0)], T::zero())]
    } else {
        let mut h = m.clone();
        balance(&mut h);
        hessenberg(&mut h);
        francis_qr(&mut h, d)?
    };

    // Sort: modulus descending, then argument ascending. Deterministic for
    // the exact conjugate pairs produced by the 2x2 block extraction.
    values.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .expect("finite eigenvalues")
            .then(
                a.im.atan2(a.re)
                    .partial_cmp(&b.im.atan2(b.re))
                    .expect("finite arguments"),
            )
    });

    let vectors = if want_vectors {
        Some(eigenvectors(m, &values))
    } else {
        None
    };

    Ok(EigenSpectrum { values, vectors })
}

/// Parlett-Reinsch balancing: diagonal similarity with powers of 2.
fn balance<T: Real>(a: &mut Matrix<T>) {
    let d = a.rows();
    let radix = real::<T>(2.0);
    let radix_sq = radix * radix;
    loop {
        let mut done = true;
        for i in 0..d {
            let mut c = T::zero();
            let mut r = T::zero();
            for j in 0..d {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let mut f = T::one();
            let s = c + r;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix_sq;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix_sq;
            }
            if (c + r) / f < real::<T>(0.95) * s {
                done = false;
                let inv = T::one() / f;
                for j in 0..d {
                    a[(i, j)] *= inv;
                }
                for j in 0..d {
                    a[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Householder reduction to upper Hessenberg form, in place.
fn hessenberg<T: Real>(h: &mut Matrix<T>) {
    let d = h.rows();
    if d < 3 {
        return;
    }
    let mut u = vec![T::zero(); d];
    for k in 0..d - 2 {
        let mut norm_sq = T::zero();
        for i in k + 1..d {
            norm_sq += h[(i, k)] * h[(i, k)];
        }
        if norm_sq == T::zero() {
            continue;
        }
        let norm = norm_sq.sqrt();
        let first = h[(k + 1, k)];
        let alpha = if first >= T::zero() { -norm } else { norm };
        for i in k + 1..d {
            u[i] = h[(i, k)];
        }
        u[k + 1] = first - alpha;
        let utu = (first - alpha) * (first - alpha) + (norm_sq - first * first);
        if utu == T::zero() {
            continue;
        }
        let beta = real::<T>(2.0) / utu;
        // rows k+1..d, all columns
        for j in 0..d {
            let mut dot = T::zero();
            for i in k + 1..d {
                dot += u[i] * h[(i, j)];
            }
            let dot = dot * beta;
            for i in k + 1..d {
                let sub = dot * u[i];
                h[(i, j)] -= sub;
            }
        }
        // all rows, columns k+1..d
        for i in 0..d {
            let mut dot = T::zero();
            for j in k + 1..d {
                dot += h[(i, j)] * u[j];
            }
            let dot = dot * beta;
            for j in k + 1..d {
                let sub = dot * u[j];
                h[(i, j)] -= sub;
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..d {
            h[(i, k)] = T::zero();
        }
    }
}

/// Implicit double-shift QR on a Hessenberg matrix; returns all eigenvalues.
fn francis_qr<T: Real>(h: &mut Matrix<T>, d: usize) -> Result<Vec<Complex<T>>> {
    let eps = T::epsilon();
    let anorm = {
        let mut s = T::zero();
        for i in 0..d {
            for j in i.saturating_sub(1)..d {
                s += h[(i, j)].abs();
            }
        }
        s.max(T::min_positive_value())
    };

    let mut values = Vec::with_capacity(d);
    let mut n = d - 1; // trailing index of the active block
    let mut total_iters = 0usize;
    let max_total = 100 * d;
    let mut block_iters = 0usize;

    'outer: loop {
        // deflate converged trailing 1x1 / 2x2 blocks
        loop {
            let l = find_block_start(h, n, eps, anorm);
            if l == n {
                values.push(Complex::new(h[(n, n)], T::zero()));
                block_iters = 0;
                if n == 0 {
                    break 'outer;
                }
                n -= 1;
                continue;
            }
            if l + 1 == n {
                let (z1, z2) = eig2(h[(l, l)], h[(l, l + 1)], h[(l + 1, l)], h[(l + 1, l + 1)]);
                values.push(z1);
                values.push(z2);
                block_iters = 0;
                if l == 0 {
                    break 'outer;
                }
                n = l - 1;
                continue;
            }
            // active block [l..=n] of size >= 3: iterate
            total_iters += 1;
            block_iters += 1;
            if total_iters > max_total {
                return Err(Error::Numerical(format!(
                    "qr iteration did not converge after {max_total} sweeps \
                     (active block {l}..={n}, subdiagonal {})",
                    h[(n, n - 1)]
                )));
            }
            let exceptional = block_iters.is_multiple_of(10);
            francis_step(h, l, n, exceptional);
            break;
        }
    }

    debug_assert_eq!(values.len(), d);
    Ok(values)
}

/// Smallest `l` such that rows `l..=n` form an unreduced Hessenberg block.
fn find_block_start<T: Real>(h: &mut Matrix<T>, n: usize, eps: T, anorm: T) -> usize {
    let mut l = n;
    while l > 0 {
        let s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
        let s = if s == T::zero() { anorm } else { s };
        if h[(l, l - 1)].abs() <= eps * s {
            h[(l, l - 1)] = T::zero();
            break;
        }
        l -= 1;
    }
    l
}

/// Eigenvalues of a real 2x2 block, as an exact conjugate pair when complex.
fn eig2<T: Real>(a: T, b: T, c: T, d: T) -> (Complex<T>, Complex<T>) {
    let half_tr = (a + d) / real::<T>(2.0);
    let det = a * d - b * c;
    let disc = half_tr * half_tr - det;
    if disc >= T::zero() {
        let q = disc.sqrt();
        let l1 = if half_tr >= T::zero() {
            half_tr + q
        } else {
            half_tr - q
        };
        let l2 = if l1 == T::zero() { half_tr } else { det / l1 };
        (Complex::new(l1, T::zero()), Complex::new(l2, T::zero()))
    } else {
        let im = (-disc).sqrt();
        (Complex::new(half_tr, im), Complex::new(half_tr, -im))
    }
}

/// One implicit double-shift sweep on the active block `l..=n` (size >= 3).
fn francis_step<T: Real>(h: &mut Matrix<T>, l: usize, n: usize, exceptional: bool) {
    let d = h.rows();
    let (s, t) = if exceptional {
        // ad-hoc shift to break symmetric stalls
        let w = h[(n, n - 1)].abs() + h[(n - 1, n - 2)].abs();
        (real::<T>(1.5) * w, real::<T>(-0.4375) * w * w)
    } else {
        let p = n - 1;
        (
            h[(p, p)] + h[(n, n)],
            h[(p, p)] * h[(n, n)] - h[(p, n)] * h[(n, p)],
        )
    };

    let mut x = h[(l, l)] * h[(l, l)] + h[(l, l + 1)] * h[(l + 1, l)] - s * h[(l, l)] + t;
    let mut y = h[(l + 1, l)] * (h[(l, l)] + h[(l + 1, l + 1)] - s);
    let mut z = h[(l + 1, l)] * h[(l + 2, l + 1)];

    let mut k = l;
    while k + 2 <= n {
        apply_householder3(h, d, k, x, y, z);
        if k + 3 <= n {
            x = h[(k + 1, k)];
            y = h[(k + 2, k)];
            z = h[(k + 3, k)];
        }
        k += 1;
    }
    // chase the last bulge entry h[n][n-2] with a plane rotation
    let x = h[(n - 1, n - 2)];
    let y = h[(n, n - 2)];
    let r = x.hypot(y);
    if r > T::zero() {
        let c = x / r;
        let s_rot = y / r;
        for j in 0..d {
            let a = h[(n - 1, j)];
            let b = h[(n, j)];
            h[(n - 1, j)] = c * a + s_rot * b;
            h[(n, j)] = -s_rot * a + c * b;
        }
        for i in 0..d {
            let a = h[(i, n - 1)];
            let b = h[(i, n)];
            h[(i, n - 1)] = c * a + s_rot * b;
            h[(i, n)] = -s_rot * a + c * b;
        }
        h[(n, n - 2)] = T::zero();
    }
}

/// Similarity transform by the Householder reflector sending (x,y,z) to
/// (*,0,0), acting on rows/columns k..k+2 across the full matrix.
fn apply_householder3<T: Real>(h: &mut Matrix<T>, d: usize, k: usize, x: T, y: T, z: T) {
    let norm = (x * x + y * y + z * z).sqrt();
    if norm == T::zero() {
        return;
    }
    let alpha = if x >= T::zero() { -norm } else { norm };
    let u0 = x - alpha;
    let utu = u0 * u0 + y * y + z * z;
    if utu == T::zero() {
        return;
    }
    let beta = real::<T>(2.0) / utu;
    let u = [u0, y, z];
    // rows k..k+2
    for j in 0..d {
        let mut dot = T::zero();
        for (off, ui) in u.iter().enumerate() {
            dot += *ui * h[(k + off, j)];
        }
        let dot = dot * beta;
        for (off, ui) in u.iter().enumerate() {
            let sub = dot * *ui;
            h[(k + off, j)] -= sub;
        }
    }
    // columns k..k+2
    for i in 0..d {
        let mut dot = T::zero();
        for (off, ui) in u.iter().enumerate() {
            dot += h[(i, k + off)] * *ui;
        }
        let dot = dot * beta;
        for (off, ui) in u.iter().enumerate() {
            let sub = dot * *ui;
            h[(i, k + off)] -= sub;
        }
    }
}

/// Inverse iteration on `m` for every numerically simple eigenvalue.
fn eigenvectors<T: Real>(m: &Matrix<T>, values: &[Complex<T>]) -> Vec<Option<Vec<Complex<T>>>> {
    let scale = values
        .iter()
        .map(|z| z.norm())
        .fold(T::zero(), T::max)
        .max(T::min_positive_value());
    let sep_tol = real::<T>(1e-8) * scale;

    values
        .iter()
        .enumerate()
        .map(|(idx, &lambda)| {
            let simple = values
                .iter()
                .enumerate()
                .all(|(j, &other)| j == idx || (other - lambda).norm() > sep_tol);
            if !simple {
                return None;
            }
            inverse_iterate(m, lambda)
        })
        .collect()
}

fn inverse_iterate<T: Real>(m: &Matrix<T>, lambda: Complex<T>) -> Option<Vec<Complex<T>>> {
    let d = m.rows();
    let mut a: Vec<Vec<Complex<T>>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let mut z = Complex::new(m[(i, j)], T::zero());
                    if i == j {
                        z -= lambda;
                    }
                    z
                })
                .collect()
        })
        .collect();

    // LU with partial pivoting; tiny pivots are clamped so the factorisation
    // of the (nearly singular) shifted matrix stays usable.
    let anorm = a
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(T::zero(), T::max)
        .max(T::min_positive_value());
    let tiny = T::epsilon() * anorm;
    let mut perm: Vec<usize> = (0..d).collect();
    for k in 0..d {
        let mut piv = k;
        for i in k + 1..d {
            if a[i][k].norm() > a[piv][k].norm() {
                piv = i;
            }
        }
        if piv != k {
            a.swap(k, piv);
            perm.swap(k, piv);
        }
        if a[k][k].norm() < tiny {
            a[k][k] = Complex::new(tiny, T::zero());
        }
        for i in k + 1..d {
            let f = a[i][k] / a[k][k];
            a[i][k] = f;
            // rows i and k alias within `a`, so plain index arithmetic it is
            #[allow(clippy::needless_range_loop)]
            for j in k + 1..d {
                let sub = f * a[k][j];
                a[i][j] -= sub;
            }
        }
    }

    let solve = |b: &[Complex<T>]| -> Vec<Complex<T>> {
        let mut x: Vec<Complex<T>> = perm.iter().map(|&p| b[p]).collect();
        for k in 0..d {
            for j in 0..k {
                let sub = a[k][j] * x[j];
                x[k] -= sub;
            }
        }
        for k in (0..d).rev() {
            for j in k + 1..d {
                let sub = a[k][j] * x[j];
                x[k] -= sub;
            }
            x[k] /= a[k][k];
        }
        x
    };

    let inv_sqrt_d = T::one() / T::from_usize(d).unwrap().sqrt();
    let mut v: Vec<Complex<T>> = (0..d)
        .map(|_| Complex::new(inv_sqrt_d, T::zero()))
        .collect();
    for _ in 0..3 {
        let w = solve(&v);
        let norm = w
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |x, y| x + y)
            .sqrt();
        if !norm.is_finite() || norm == T::zero() {
            return None;
        }
        v = w.into_iter().map(|z| z / norm).collect();
    }

    // Fix the phase: largest component made real and positive.
    let (max_idx, _) = v
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.norm().partial_cmp(&b.norm()).unwrap())
        .unwrap();
    let phase = v[max_idx] / v[max_idx].norm();
    let v: Vec<Complex<T>> = v.into_iter().map(|z| z * phase.conj()).collect();
    Some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_spectra_match_trace_and_det() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(88);
        for trial in 0..300 {
            let d = 2 + trial % 7; // dimensions 2..=8
            let m = Matrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
            let e = eigen(&m, false).unwrap();
            assert_eq!(e.values.len(), d);
            let sum: Complex<f64> = e.values.iter().sum();
            let trace: f64 = (0..d).map(|i| m[(i, i)]).sum();
            let scale: f64 = e.moduli()[0].max(1.0);
            assert!(
                (sum.re - trace).abs() < 1e-8 * scale && sum.im.abs() < 1e-8 * scale,
                "trial {trial} d={d}: trace {trace} vs {sum}"
            );
            let prod: Complex<f64> = e.values.iter().product();
            let det = m.det().unwrap();
            assert!(
                (prod.re - det).abs() < 1e-8 * scale.powi(d as i32) && prod.im.abs() < 1e-8,
                "trial {trial} d={d}: det {det} vs {prod}"
            );
            // complex eigenvalues pair up with exact conjugates
            for z in &e.values {
                if z.im != 0.0 {
                    assert!(
                        e.values.iter().any(|w| w.re == z.re && w.im == -z.im),
                        "trial {trial}: unpaired {z}"
                    );
                }
            }
        }
    }

    #[test]
    fn defective_spectrum_degrades_gracefully() {
        // a 4x4 Jordan block at 0.5, hidden behind a fixed similarity;
        // defective eigenvalues are ill-conditioned (perturbations of
        // order eps^(1/4)), so only loose per-eigenvalue accuracy can be
        // demanded, while trace and determinant stay sharp
        let lambda = 0.5_f64;
        let mut j = Matrix::<f64>::zeros(4, 4);
        for i in 0..4 {
            j[(i, i)] = lambda;
            if i + 1 < 4 {
                j[(i, i + 1)] = 1.0;
            }
        }
        let p = Matrix::from_rows(&[
            &[1.0, 0.3, -0.2, 0.5],
            &[0.0, 1.0, 0.4, -0.1],
            &[0.2, -0.5, 1.0, 0.3],
            &[-0.3, 0.1, 0.0, 1.0],
        ]);
        let p_inv_cols: Vec<Vec<f64>> = (0..4)
            .map(|c| {
                let mut e = vec![0.0; 4];
                e[c] = 1.0;
                p.solve(&e).unwrap()
            })
            .collect();
        let p_inv = Matrix::from_fn(4, 4, |r, c| p_inv_cols[c][r]);
        let m = p.mul(&j).mul(&p_inv);

        let e = eigen(&m, false).unwrap();
        for z in &e.values {
            assert!((z - Complex::new(lambda, 0.0)).norm() < 2e-2, "{z}");
        }
        let sum: Complex<f64> = e.values.iter().sum();
        assert!((sum.re - 4.0 * lambda).abs() < 1e-8 && sum.im.abs() < 1e-8);
        let prod: Complex<f64> = e.values.iter().product();
        assert!((prod.re - lambda.powi(4)).abs() < 1e-8 && prod.im.abs() < 1e-8);
    }

    #[test]
    fn rotation_spectrum() {
        let m = Matrix::rotation2(1.0_f64);
        let e = eigen(&m, false).unwrap();
        assert_eq!(e.values.len(), 2);
        for z in &e.values {
            assert!((z.norm() - 1.0).abs() < 1e-12);
            assert!((z.re - 1.0_f64.cos()).abs() < 1e-12);
            assert!((z.im.abs() - 1.0_f64.sin()).abs() < 1e-12);
        }
        // conjugate pair, sorted with negative argument first
        assert!(e.values[0].im < 0.0);
        assert_eq!(e.values[0].re, e.values[1].re);
        assert_eq!(e.values[0].im, -e.values[1].im);
    }

    #[test]
    fn positive_matrix_spectrum() {
        let m = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 1.0]]);
        let e = eigen(&m, true).unwrap();
        let expected = [(3.0 + 5.0_f64.sqrt()) / 2.0, (3.0 - 5.0_f64.sqrt()) / 2.0];
        for (z, want) in e.values.iter().zip(expected) {
            assert!((z.re - want).abs() < 1e-12, "{z} vs {want}");
            assert!(z.im.abs() < 1e-12);
        }
        // eigenvector residual check
        let vectors = e.vectors.unwrap();
        for (z, v) in e.values.iter().zip(&vectors) {
            let v = v.as_ref().expect("simple eigenvalues");
            let mut residual = 0.0_f64;
            for i in 0..2 {
                let mut acc = Complex::new(0.0, 0.0);
                for j in 0..2 {
                    acc += Complex::new(m[(i, j)], 0.0) * v[j];
                }
                residual += (acc - *z * v[i]).norm();
            }
            assert!(residual < 1e-9, "residual {residual}");
        }
    }

    #[test]
    fn larger_random_matrix_char_poly_roots() {
        // 4x4 with known spectrum: diag(3, -2, 1+2i pair via block)
        let m = Matrix::from_rows(&[
            &[3.0, 1.0, 0.0, 2.0],
            &[0.0, 1.0, 2.0, 1.0],
            &[0.0, -2.0, 1.0, 0.5],
            &[0.0, 0.0, 0.0, -2.0],
        ]);
        let e = eigen(&m, false).unwrap();
        let mut mods: Vec<f64> = e.moduli();
        mods.sort_by(|a, b| b.partial_cmp(a).unwrap());
        // block [[1,2],[-2,1]] has eigenvalues 1 +- 2i, modulus sqrt(5)
        assert!((mods[0] - 3.0).abs() < 1e-10);
        assert!((mods[1] - 5.0_f64.sqrt()).abs() < 1e-10);
        assert!((mods[2] - 5.0_f64.sqrt()).abs() < 1e-10);
        assert!((mods[3] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn trace_and_det_preserved() {
        // eigenvalue sums/products match trace and determinant
        let m = Matrix::from_rows(&[
            &[0.5, -0.3, 0.8, 0.1, -0.6],
            &[0.2, 0.9, -0.5, 0.7, 0.3],
            &[-0.4, 0.6, 0.1, -0.2, 0.5],
            &[0.3, -0.7, 0.4, 0.8, -0.1],
            &[0.1, 0.2, -0.9, 0.5, 0.6],
        ]);
        let e = eigen(&m, false).unwrap();
        let sum: Complex<f64> = e.values.iter().sum();
        let trace: f64 = (0..5).map(|i| m[(i, i)]).sum();
        assert!((sum.re - trace).abs() < 1e-9, "trace {trace} vs {sum}");
        assert!(sum.im.abs() < 1e-9);
        let prod: Complex<f64> = e.values.iter().product();
        let det = m.det().unwrap();
        assert!((prod.re - det).abs() < 1e-9 * det.abs().max(1.0));
        assert!(prod.im.abs() < 1e-9);
    }

    #[test]
    fn dimension_cap() {
        let m = Matrix::<f64>::identity(9);
        assert!(matches!(eigen(&m, false), Err(Error::Domain(_))));
    }
}
