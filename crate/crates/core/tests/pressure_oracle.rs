//! Brute-force oracles for the pressure pipeline: every word product is
//! recomputed from scratch (no shared prefixes) and the level sums are
//! accumulated directly, independently of the streaming walker.

use affdim::linalg::{kronecker, singular_values, Matrix};
use affdim::pressure::{affinity_dimension, level_pressure, projected_exponent, MatrixTuple};
use affdim::wordspace::VisitOptions;

type M = Matrix<f64>;

fn enumerate_words(arity: usize, len: usize) -> Vec<Vec<u8>> {
    let mut words: Vec<Vec<u8>> = vec![vec![]];
    for _ in 0..len {
        words = words
            .into_iter()
            .flat_map(|w| {
                (1..=arity as u8).map(move |s| {
                    let mut w2 = w.clone();
                    w2.push(s);
                    w2
                })
            })
            .collect();
    }
    words
}

/// Fresh left-to-right product, one multiply per letter, per word.
fn naive_product(maps: &[M], word: &[u8]) -> M {
    let mut acc = maps[word[0] as usize - 1].clone();
    for &s in &word[1..] {
        acc = acc.mul(&maps[s as usize - 1]);
    }
    acc
}

fn naive_log_phi(m: &M, s: f64) -> f64 {
    let sigma = singular_values(m).unwrap().values;
    let d = sigma.len() as f64;
    if s == 0.0 {
        return 0.0;
    }
    if s <= d {
        let k = s.floor() as usize;
        let frac = s - k as f64;
        let mut acc = 0.0;
        for &v in &sigma[..k] {
            if v <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += v.ln();
        }
        if frac > 0.0 {
            if sigma[k] <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += frac * sigma[k].ln();
        }
        acc
    } else {
        let log_det: f64 = sigma.iter().map(|v| v.ln()).sum();
        log_det * s / d
    }
}

/// Direct level sum: collect the finite log terms, subtract the maximum,
/// sum the exponentials in plain order.
fn naive_level_value(maps: &[M], q: Option<&M>, n: usize, s: f64) -> f64 {
    let logs: Vec<f64> = enumerate_words(maps.len(), n)
        .iter()
        .map(|w| {
            let p = naive_product(maps, w);
            let p = match q {
                Some(q) => q.mul(&p),
                None => p,
            };
            naive_log_phi(&p, s)
        })
        .filter(|x| x.is_finite())
        .collect();
    if logs.is_empty() {
        return f64::NEG_INFINITY;
    }
    let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (mx + logs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()) / n as f64
}

fn naive_envelope(maps: &[M], q: Option<&M>, n: usize, s: f64) -> f64 {
    (1..=n)
        .map(|m| naive_level_value(maps, q, m, s))
        .fold(f64::INFINITY, f64::min)
}

fn sample_tuple() -> MatrixTuple<f64> {
    MatrixTuple::new(vec![
        Matrix::from_rows(&[&[0.45, 0.12], &[-0.03, 0.38]]),
        Matrix::from_rows(&[&[0.3, -0.2], &[0.11, 0.52]]),
        Matrix::from_rows(&[&[0.5, 0.05], &[0.02, -0.4]]),
    ])
    .unwrap()
}

#[test]
fn level_pressure_matches_naive_recomputation() {
    let tuple = sample_tuple();
    let opts = VisitOptions::default();
    for n in 1..=5 {
        for &s in &[0.0, 0.5, 1.0, 1.3, 2.0, 2.7] {
            let fast = level_pressure(&tuple, s, n, None, &opts).unwrap();
            let slow = naive_level_value(tuple.maps(), None, n, s);
            assert!(
                (fast.value - slow).abs() < 1e-11,
                "n={n} s={s}: {} vs {slow}",
                fast.value
            );
            let slow_env = naive_envelope(tuple.maps(), None, n, s);
            assert!((fast.envelope - slow_env).abs() < 1e-11);
        }
    }
}

#[test]
fn level_pressure_matches_naive_with_projection() {
    let tuple = sample_tuple();
    let q = Matrix::from_rows(&[&[1.0, 0.5], &[0.0, 0.0]]);
    let opts = VisitOptions::default();
    for n in 1..=4 {
        for &s in &[0.5, 1.0, 1.5] {
            let fast = level_pressure(&tuple, s, n, Some(&q), &opts).unwrap();
            let slow = naive_level_value(tuple.maps(), Some(&q), n, s);
            if slow.is_finite() {
                assert!((fast.value - slow).abs() < 1e-11, "n={n} s={s}");
            } else {
                assert_eq!(fast.value, f64::NEG_INFINITY);
            }
        }
    }
}

#[test]
fn level_pressure_sharded_matches_naive() {
    let tuple = sample_tuple();
    for shards in [2, 5] {
        let opts = VisitOptions {
            shards,
            ..Default::default()
        };
        let fast = level_pressure(&tuple, 1.2, 5, None, &opts).unwrap();
        let slow = naive_level_value(tuple.maps(), None, 5, 1.2);
        assert!((fast.value - slow).abs() < 1e-11, "shards={shards}");
    }
}

#[test]
fn similitude_dimension_stable_across_levels() {
    // log N / log(1/r) at every level n >= 1
    let r = 1.0 / 3.0;
    let m = Matrix::from_rows(&[&[r, 0.0], &[0.0, r]]);
    let tuple = MatrixTuple::new(vec![m.clone(), m.clone(), m.clone(), m]).unwrap();
    let expected = 4.0_f64.ln() / 3.0_f64.ln();
    let tol = 1e-4;
    for n in 1..=6 {
        let b = affinity_dimension(&tuple, n, tol, &VisitOptions::default()).unwrap();
        assert!(
            (b.midpoint() - expected).abs() <= tol,
            "n={n}: [{}, {}]",
            b.lower,
            b.upper
        );
    }
}

/// The shear-rotation system: premultiplying by `I (x) P` with a rank-one
/// orthogonal `P` collapses the word products onto the 2x2 shear factors:
/// `phi^s(Q Mhat_w) = phi^s(C_w / sqrt(14)^|w|)` for `s <= 2`, because the
/// rotation factors contribute unit singular values through `P R_w`.
#[test]
fn shear_rotation_projection_factorises() {
    let c = Matrix::from_rows(&[&[1.0, 3.0], &[0.0, 1.0]]);
    let r = Matrix::rotation2(1.0_f64);
    let scale = 1.0 / 14.0_f64.sqrt();
    let m1 = kronecker(&c, &r).scale(scale);
    let m2 = m1.transpose();
    let maps4 = [m1, m2];
    let base = [c.scale(scale), c.transpose().scale(scale)];
    let p = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
    let q = kronecker(&Matrix::identity(2), &p);

    for n in 1..=6 {
        for word in enumerate_words(2, n) {
            let lhs = naive_log_phi(&q.mul(&naive_product(&maps4, &word)), 1.3);
            let rhs = naive_log_phi(&naive_product(&base, &word), 1.3);
            assert!((lhs - rhs).abs() < 1e-10, "word {word:?}: {lhs} vs {rhs}");
            let lhs2 = naive_log_phi(&q.mul(&naive_product(&maps4, &word)), 2.0);
            let rhs2 = naive_log_phi(&naive_product(&base, &word), 2.0);
            assert!((lhs2 - rhs2).abs() < 1e-10);
        }
    }
}

#[test]
fn shear_rotation_projected_exponent_equals_base_dimension() {
    use affdim::gallery::ShearRotationInstance;
    use affdim::pressure::kron_projected_bound;

    let inst = ShearRotationInstance::<f64>::new(1.0, None, None).unwrap();
    let p = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
    let q = kronecker(&Matrix::identity(2), &p);
    let opts = VisitOptions::default();
    let tol = 1e-4;
    let n = 6;

    let projected = projected_exponent(inst.tuple(), &q, n, tol, &opts).unwrap();
    let base_dim = affinity_dimension(&inst.base_shear().unwrap(), n, tol, &opts).unwrap();
    assert!(
        projected.bracket.overlaps(&base_dim, tol),
        "projected [{}, {}] vs base [{}, {}]",
        projected.bracket.lower,
        projected.bracket.upper,
        base_dim.lower,
        base_dim.upper
    );

    // and the certified Kronecker-factorisation bound agrees: the rotation
    // factors have norm one, so the scaled tuple is the base tuple itself
    let bound = kron_projected_bound(
        &inst.base_shear().unwrap(),
        &inst.base_rotation().unwrap(),
        &p,
        n,
        tol,
        &opts,
    )
    .unwrap();
    assert!(bound.overlaps(&base_dim, 1e-9));
}
