//! Randomised linear-algebra invariants, including the variational
//! characterisation of singular values over the right-singular subspaces.

use affdim::linalg::{eigen, exterior_power, kronecker, singular_values, svd, Matrix};
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> Matrix<f64> {
    Matrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0))
}

#[test]
fn kronecker_eigenvalues_are_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..25 {
        let a = random_matrix(&mut rng, 2);
        let b = random_matrix(&mut rng, 2);
        let ea = eigen(&a, false).unwrap().moduli();
        let eb = eigen(&b, false).unwrap().moduli();
        let mut expected: Vec<f64> = ea
            .iter()
            .flat_map(|&x| eb.iter().map(move |&y| x * y))
            .collect();
        expected.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let got = eigen(&kronecker(&a, &b), false).unwrap().moduli();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-8 * e.max(1.0), "{got:?} vs {expected:?}");
        }
    }
}

#[test]
fn operator_norm_submultiplicative_and_det_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let d = rng.gen_range(2..=4);
        let a = random_matrix(&mut rng, d);
        let b = random_matrix(&mut rng, d);
        let sa = singular_values(&a).unwrap().values;
        let sb = singular_values(&b).unwrap().values;
        let sab = singular_values(&a.mul(&b)).unwrap().values;
        assert!(sab[0] <= sa[0] * sb[0] * (1.0 + 1e-12));
        let prod: f64 = sa.iter().product();
        let det = a.det().unwrap().abs();
        assert!(
            (prod - det).abs() <= 1e-9 * det.max(1e-12),
            "prod {prod} det {det}"
        );
    }
}

/// sigma_j(A) = max over j-dim subspaces W of min_{w in W} |Aw|/|w|; the
/// maximum is attained on the span of the first j right-singular vectors.
#[test]
fn variational_characterisation_spot_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..40 {
        let d = rng.gen_range(2..=4);
        let a = random_matrix(&mut rng, d);
        let f = svd(&a).unwrap();
        for j in 1..=d {
            // the minimising direction inside span(v_1..v_j) is v_j itself
            let vj: Vec<f64> = (0..d).map(|i| f.v[(i, j - 1)]).collect();
            let image = a.mul_vec(&vj);
            let attained: f64 = image.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(
                (attained - f.sigma[j - 1]).abs() <= 1e-8 * f.sigma[0].max(1e-12),
                "j={j}: {attained} vs {}",
                f.sigma[j - 1]
            );
            // random unit vectors in the span must not map below sigma_j
            for _ in 0..10 {
                let coeffs: Vec<f64> = (0..j).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mut w = vec![0.0; d];
                for (c_idx, &c) in coeffs.iter().enumerate() {
                    for (i, wi) in w.iter_mut().enumerate() {
                        *wi += c * f.v[(i, c_idx)];
                    }
                }
                let wn: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                if wn < 1e-9 {
                    continue;
                }
                let im = a.mul_vec(&w);
                let quotient = im.iter().map(|x| x * x).sum::<f64>().sqrt() / wn;
                assert!(
                    quotient >= f.sigma[j - 1] * (1.0 - 1e-8) - 1e-12,
                    "j={j}: quotient {quotient} below sigma_j {}",
                    f.sigma[j - 1]
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_transpose_identity(entries in prop::collection::vec(-2.0_f64..2.0, 8)) {
        let a = Matrix::from_row_major(2, 2, entries[..4].to_vec()).unwrap();
        let b = Matrix::from_row_major(2, 2, entries[4..].to_vec()).unwrap();
        prop_assert_eq!(
            kronecker(&a, &b).transpose(),
            kronecker(&a.transpose(), &b.transpose())
        );
    }

    #[test]
    fn exterior_functoriality(entries in prop::collection::vec(-1.5_f64..1.5, 18)) {
        let a = Matrix::from_row_major(3, 3, entries[..9].to_vec()).unwrap();
        let b = Matrix::from_row_major(3, 3, entries[9..].to_vec()).unwrap();
        for k in 1..=3 {
            let lhs = exterior_power(&a.mul(&b), k).unwrap();
            let rhs = exterior_power(&a, k).unwrap().mul(&exterior_power(&b, k).unwrap());
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
        }
    }

    #[test]
    fn kron_norm_multiplicative(entries in prop::collection::vec(-2.0_f64..2.0, 8)) {
        let a = Matrix::from_row_major(2, 2, entries[..4].to_vec()).unwrap();
        let b = Matrix::from_row_major(2, 2, entries[4..].to_vec()).unwrap();
        let lhs = singular_values(&kronecker(&a, &b)).unwrap().values[0];
        let rhs = singular_values(&a).unwrap().values[0]
            * singular_values(&b).unwrap().values[0];
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1e-9));
    }
}
