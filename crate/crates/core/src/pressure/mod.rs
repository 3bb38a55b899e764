//! Singular value function, finite-level subadditive pressure, affinity
//! dimension, and projected exponents.
//!
//! For a tuple `(A_1,...,A_N)` the level-`n` quantity is
//! `a_n(s) = log sum_{|w|=n} phi^s(A_w)`, accumulated in the log domain.
//! By subadditivity every `a_m(s)/m` dominates the limit pressure, so the
//! *envelope* `min_{m<=n} a_m(s)/m` is a certified upper bound on the
//! pressure at `s`, and the zero in `s` of the envelope is a certified
//! upper bound on the affinity dimension. The toolkit reports envelopes
//! and never extrapolates towards the `n -> infinity` limit.
//!
//! Depth limit: word products are formed explicitly, and forming a
//! product caps the smallest recoverable singular value at roughly
//! `epsilon * sigma_1`; anything below reads back as zero and its
//! `phi^s` terms drop out of the sums. For strongly nonconformal tuples
//! that bound bites once `(sigma_d/sigma_1)^n` falls under `1e-16` —
//! around level 14 for the systems shipped here — so level choices
//! should stay on the near side of it.

mod kappa;
mod logsum;

pub use kappa::{kappa_estimate, quasimult_check, KappaEstimate, QuasimultReport};
pub use logsum::LogSumExp;

pub use crate::wordspace::MatrixTuple;

use crate::error::{Error, Result};
use crate::linalg::{singular_values, Matrix};
use crate::scalar::{real, Real};
use crate::wordspace::{visit_words_up_to, VisitOptions};
use serde::{Deserialize, Serialize};

/// Relative cutoff below which a singular value counts as zero when
/// deciding the rank of a projection.
const RANK_REL_TOL: f64 = 1e-9;

/// A finite-level pressure value `a_n(s)/n` together with the envelope
/// `min_{m<=n} a_m(s)/m`. The envelope, not the level value, is the
/// certified upper bound on the limit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PressureEstimate<T> {
    pub s: T,
    pub level: usize,
    pub value: T,
    pub envelope: T,
}

/// Bisection bracket around the zero of a level envelope. Since the
/// envelope dominates the limit pressure, `upper` is a certified upper
/// bound for the corresponding limit quantity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionBracket<T> {
    pub lower: T,
    pub upper: T,
    pub level: usize,
    pub tol: T,
}

impl<T: Real> DimensionBracket<T> {
    pub fn midpoint(&self) -> T {
        (self.lower + self.upper) / real::<T>(2.0)
    }

    pub fn width(&self) -> T {
        self.upper - self.lower
    }

    pub fn overlaps(&self, other: &DimensionBracket<T>, slack: T) -> bool {
        self.lower - slack <= other.upper && other.lower - slack <= self.upper
    }
}

/// Result of [`projected_exponent`]: the empirical envelope-zero bracket
/// for the premultiplied sums, plus the crude certified bound
/// `min(affinity-dimension upper bound, rank Q)` coming from the series
/// comparison `sum phi^s(QA_w) <= phi^s(Q) sum phi^s(A_w)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectedExponent<T> {
    pub bracket: DimensionBracket<T>,
    pub crude_upper: T,
    pub rank_q: usize,
}

/// The singular value function `phi^s`.
///
/// For `0 <= s <= d` this is `sigma_1 ... sigma_floor(s) *
/// sigma_ceil(s)^(s - floor(s))`; beyond the dimension it continues as
/// `|det|^(s/d)`. Rank-deficient input makes it vanish once `s` passes the
/// rank.
pub fn svf<T: Real>(m: &Matrix<T>, s: T) -> Result<T> {
    if s < T::zero() {
        return Err(Error::Domain(format!("svf exponent must be >= 0, got {s}")));
    }
    let sigma = singular_values(m)?.values;
    Ok(log_svf_sorted(&sigma, s).exp())
}

/// `log phi^s` from a non-increasing singular value list; `-inf` encodes a
/// vanishing value. Callers guarantee `s >= 0`.
pub(crate) fn log_svf_sorted<T: Real>(sigma: &[T], s: T) -> T {
    let d = sigma.len();
    if s == T::zero() {
        return T::zero();
    }
    let d_t = T::from_usize(d).unwrap();
    if s <= d_t {
        let k = s.floor().to_usize().unwrap().min(d);
        let frac = s - T::from_usize(k).unwrap();
        let mut acc = T::zero();
        for &v in &sigma[..k] {
            if v <= T::zero() {
                return T::neg_infinity();
            }
            acc += v.ln();
        }
        if frac > T::zero() {
            let v = sigma[k];
            if v <= T::zero() {
                return T::neg_infinity();
            }
            acc += frac * v.ln();
        }
        acc
    } else {
        let mut acc = T::zero();
        for &v in sigma {
            if v <= T::zero() {
                return T::neg_infinity();
            }
            acc += v.ln();
        }
        acc * (s / d_t)
    }
}

/// Numerical rank against a relative singular value cutoff.
pub fn rank<T: Real>(m: &Matrix<T>) -> Result<usize> {
    let sigma = singular_values(m)?.values;
    let cutoff = real::<T>(RANK_REL_TOL) * sigma[0];
    Ok(sigma.iter().filter(|&&v| v > cutoff).count())
}

fn check_projection_shape<T: Real>(tuple: &MatrixTuple<T>, q: Option<&Matrix<T>>) -> Result<()> {
    if let Some(q) = q {
        if q.rows() != tuple.dim() || q.cols() != tuple.dim() {
            return Err(Error::Shape(format!(
                "projection must be {0}x{0}, got {1}x{2}",
                tuple.dim(),
                q.rows(),
                q.cols()
            )));
        }
    }
    Ok(())
}

fn envelope_of_sums<T: Real>(sums: &[T]) -> T {
    sums.iter()
        .enumerate()
        .map(|(i, &a)| a / T::from_usize(i + 1).unwrap())
        .fold(T::infinity(), T::min)
}

struct StreamAcc<T> {
    sums: Vec<LogSumExp<T>>,
    poisoned: Option<String>,
}

/// One streaming pass over the word tree: `a_m(s)` for every `m <= n`,
/// accumulated per level in the log domain and merged in shard order.
fn streamed_level_log_sums<T: Real>(
    tuple: &MatrixTuple<T>,
    q: Option<&Matrix<T>>,
    s: T,
    n: usize,
    opts: &VisitOptions,
) -> Result<Vec<T>> {
    check_projection_shape(tuple, q)?;
    let (acc, _) = visit_words_up_to(
        tuple.maps(),
        n,
        opts,
        || StreamAcc {
            sums: vec![LogSumExp::new(); n],
            poisoned: None,
        },
        |acc: &mut StreamAcc<T>, word, prod| {
            if acc.poisoned.is_some() {
                return;
            }
            let result = match q {
                Some(q) => singular_values(&q.mul(prod)),
                None => singular_values(prod),
            };
            match result {
                Ok(sv) => acc.sums[word.len() - 1].add_log(log_svf_sorted(&sv.values, s)),
                Err(e) => {
                    acc.poisoned = Some(format!(
                        "singular values failed at level {}: {e}",
                        word.len()
                    ))
                }
            }
        },
        |a, b| {
            if a.poisoned.is_none() {
                a.poisoned = b.poisoned;
                for (dst, src) in a.sums.iter_mut().zip(&b.sums) {
                    dst.merge(src);
                }
            }
        },
    )?;
    if let Some(msg) = acc.poisoned {
        return Err(Error::Numerical(msg));
    }
    Ok(acc.sums.iter().map(|l| l.log_total()).collect())
}

/// Per-level singular value lists of the (optionally `Q`-premultiplied)
/// word products, cached so a bisection can re-evaluate many exponents
/// without re-enumerating the tree. Values are stored in visit order,
/// which keeps the log-sum accumulation identical to the streaming pass.
struct SigmaCache<T> {
    dim: usize,
    levels: Vec<Vec<T>>,
}

struct LevelAcc<T> {
    levels: Vec<Vec<T>>,
    poisoned: Option<String>,
}

/// Caching pays once the same tree feeds many exponents; past this many
/// stored values the bisection re-walks the tree per evaluation instead.
const CACHE_VALUE_LIMIT: u64 = 48_000_000;

fn cache_fits<T: Real>(tuple: &MatrixTuple<T>, n: usize) -> bool {
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..n {
        level = level.saturating_mul(tuple.arity() as u128);
        total = total.saturating_add(level);
    }
    total.saturating_mul(tuple.dim() as u128) <= CACHE_VALUE_LIMIT as u128
}

fn build_sigma_cache<T: Real>(
    tuple: &MatrixTuple<T>,
    q: Option<&Matrix<T>>,
    n: usize,
    opts: &VisitOptions,
) -> Result<SigmaCache<T>> {
    check_projection_shape(tuple, q)?;
    let d = tuple.dim();
    let (acc, _) = visit_words_up_to(
        tuple.maps(),
        n,
        opts,
        || LevelAcc {
            levels: vec![Vec::new(); n],
            poisoned: None,
        },
        |acc: &mut LevelAcc<T>, word, prod| {
            if acc.poisoned.is_some() {
                return;
            }
            let result = match q {
                Some(q) => singular_values(&q.mul(prod)),
                None => singular_values(prod),
            };
            match result {
                Ok(s) => acc.levels[word.len() - 1].extend_from_slice(&s.values),
                Err(e) => {
                    acc.poisoned = Some(format!(
                        "singular values failed at level {}: {e}",
                        word.len()
                    ))
                }
            }
        },
        |a, b| {
            if a.poisoned.is_none() {
                a.poisoned = b.poisoned;
                for (dst, src) in a.levels.iter_mut().zip(b.levels) {
                    dst.extend_from_slice(&src);
                }
            }
        },
    )?;
    if let Some(msg) = acc.poisoned {
        return Err(Error::Numerical(msg));
    }
    Ok(SigmaCache {
        dim: d,
        levels: acc.levels,
    })
}

impl<T: Real> SigmaCache<T> {
    /// `a_m(s)` for every cached level `m`.
    fn level_log_sums(&self, s: T) -> Vec<T> {
        self.levels
            .iter()
            .map(|level| {
                let mut acc = LogSumExp::new();
                for sigma in level.chunks_exact(self.dim) {
                    acc.add_log(log_svf_sorted(sigma, s));
                }
                acc.log_total()
            })
            .collect()
    }

    /// `min_{m<=n} a_m(s)/m`.
    fn envelope(&self, s: T) -> T {
        envelope_of_sums(&self.level_log_sums(s))
    }
}

/// Finite-level pressure `a_n(s)/n`, or `b_n(s)/n` when a projection `Q`
/// premultiplies every word product. The envelope across levels `m <= n`
/// comes for free from the same tree walk.
pub fn level_pressure<T: Real>(
    tuple: &MatrixTuple<T>,
    s: T,
    n: usize,
    q: Option<&Matrix<T>>,
    opts: &VisitOptions,
) -> Result<PressureEstimate<T>> {
    if s < T::zero() {
        return Err(Error::Domain(format!("exponent must be >= 0, got {s}")));
    }
    let sums = streamed_level_log_sums(tuple, q, s, n, opts)?;
    let value = sums[n - 1] / T::from_usize(n).unwrap();
    let envelope = envelope_of_sums(&sums);
    Ok(PressureEstimate {
        s,
        level: n,
        value,
        envelope,
    })
}

const BISECT_MAX_ITERS: usize = 60;
const MIN_TOL: f64 = 1e-6;

/// Bisect the zero of `envelope` over `[0, d]`, maintaining the invariant
/// that the envelope is positive at `lower` and non-positive at `upper`.
fn bisect_envelope<T: Real>(
    envelope: impl Fn(T) -> T,
    d: usize,
    n: usize,
    tol: T,
) -> Result<DimensionBracket<T>> {
    let mut lo = T::zero();
    let mut hi = T::from_usize(d).unwrap();
    // At s = 0 every phi^0 = 1, so the envelope equals log N > 0; the top
    // end must be checked.
    let e_hi = envelope(hi);
    if e_hi > T::zero() {
        return Err(Error::Precondition(format!(
            "level envelope still positive at s = d = {d} ({e_hi}); \
             the tuple is not contracting enough for a zero in [0, {d}]"
        )));
    }
    let mut iters = 0;
    while hi - lo > tol && iters < BISECT_MAX_ITERS {
        let mid = (lo + hi) / real::<T>(2.0);
        if envelope(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    Ok(DimensionBracket {
        lower: lo,
        upper: hi,
        level: n,
        tol,
    })
}

fn check_tol<T: Real>(tol: T) -> Result<()> {
    if tol < real::<T>(MIN_TOL) {
        return Err(Error::Domain(format!(
            "bisection tolerance {tol} below the supported minimum {MIN_TOL}"
        )));
    }
    Ok(())
}

fn check_contracting<T: Real>(tuple: &MatrixTuple<T>) -> Result<()> {
    if let Some(i) = tuple.first_non_contracting() {
        return Err(Error::Precondition(format!(
            "map {i} has operator norm {} >= 1; the tuple must be contracting",
            tuple.operator_norms()[i - 1]
        )));
    }
    Ok(())
}

fn bisect_with_best_strategy<T: Real>(
    tuple: &MatrixTuple<T>,
    q: Option<&Matrix<T>>,
    n: usize,
    tol: T,
    opts: &VisitOptions,
) -> Result<DimensionBracket<T>> {
    if cache_fits(tuple, n) {
        let cache = build_sigma_cache(tuple, q, n, opts)?;
        bisect_envelope(|s| cache.envelope(s), tuple.dim(), n, tol)
    } else {
        // too large to cache: re-walk the tree per bisection step
        let eval = |s: T| -> T {
            envelope_of_sums(
                &streamed_level_log_sums(tuple, q, s, n, opts)
                    .expect("walk succeeded during bracketing"),
            )
        };
        // surface walk errors before entering the closure-based bisection
        streamed_level_log_sums(tuple, q, T::one(), n, opts)?;
        bisect_envelope(eval, tuple.dim(), n, tol)
    }
}

/// Bracket the zero of the level-`n` envelope: a certified upper bound on
/// the affinity dimension, straddled to width `tol`.
pub fn affinity_dimension<T: Real>(
    tuple: &MatrixTuple<T>,
    n: usize,
    tol: T,
    opts: &VisitOptions,
) -> Result<DimensionBracket<T>> {
    check_tol(tol)?;
    check_contracting(tuple)?;
    bisect_with_best_strategy(tuple, None, n, tol, opts)
}

/// Empirical projected exponent: the zero of the `Q`-premultiplied level
/// envelope, plus the crude certified bound `min(dimaff upper, rank Q)`.
pub fn projected_exponent<T: Real>(
    tuple: &MatrixTuple<T>,
    q: &Matrix<T>,
    n: usize,
    tol: T,
    opts: &VisitOptions,
) -> Result<ProjectedExponent<T>> {
    check_tol(tol)?;
    check_contracting(tuple)?;
    let sigma_q = singular_values(q)?.values;
    if sigma_q[0] <= T::zero() {
        return Err(Error::Domain("projection Q must be non-zero".into()));
    }
    let rank_q = rank(q)?;
    let bracket = bisect_with_best_strategy(tuple, Some(q), n, tol, opts)?;
    let plain = affinity_dimension(tuple, n, tol, opts)?;
    let crude_upper = plain.upper.min(T::from_usize(rank_q).unwrap());
    Ok(ProjectedExponent {
        bracket,
        crude_upper,
        rank_q,
    })
}

/// Certified upper bound on the projected exponent of the Kronecker system
/// `M_i = A_i (x) B_i` under `Q = I (x) P` with `P` of rank one.
///
/// The two nonzero singular values of `QM_w` factor as
/// `sigma_j(A_w) * sigma_1(P B_w)`, so the premultiplied series is bounded
/// by the plain series of the scaled two-dimensional tuple
/// `(|B| A_1, ..., |B| A_N)` with `|B| = max_i sigma_1(B_i)`; the returned
/// bracket is that tuple's affinity-dimension upper bracket.
pub fn kron_projected_bound<T: Real>(
    base_a: &MatrixTuple<T>,
    base_b: &MatrixTuple<T>,
    p: &Matrix<T>,
    n: usize,
    tol: T,
    opts: &VisitOptions,
) -> Result<DimensionBracket<T>> {
    if base_a.dim() != 2 || base_b.dim() != 2 {
        return Err(Error::Shape(
            "kron_projected_bound expects 2x2 factors".into(),
        ));
    }
    if base_a.arity() != base_b.arity() {
        return Err(Error::Shape(format!(
            "factor tuples must have equal arity, got {} and {}",
            base_a.arity(),
            base_b.arity()
        )));
    }
    if p.rows() != 2 || p.cols() != 2 {
        return Err(Error::Shape("P must be 2x2".into()));
    }
    if rank(p)? != 1 {
        return Err(Error::Domain(
            "the factorisation requires a rank-one P: the nonzero singular values \
             of (I(x)P)(A(x)B) are sigma_1(A)sigma_1(PB) and sigma_2(A)sigma_1(PB)"
                .into(),
        ));
    }
    // the Kronecker tuple itself must contract
    for i in 0..base_a.arity() {
        let norm = base_a.operator_norms()[i] * base_b.operator_norms()[i];
        if norm >= T::one() {
            return Err(Error::Precondition(format!(
                "Kronecker map {} has operator norm {norm} >= 1",
                i + 1
            )));
        }
    }
    let norm_b = base_b.max_operator_norm();
    let scaled = base_a.scaled(norm_b)?;
    affinity_dimension(&scaled, n, tol, opts)
}

/// Certified lower bound `log sum_i sigma_2(A_i)` on the pressure at
/// `s = 1` of a two-dimensional tuple; valid because the second singular
/// value is super-multiplicative in dimension two.
pub fn pressure_at_one_lower<T: Real>(tuple: &MatrixTuple<T>) -> Result<T> {
    if tuple.dim() != 2 {
        return Err(Error::Domain(
            "the sigma_2 super-multiplicativity bound holds in dimension 2 only".into(),
        ));
    }
    let mut sum = T::zero();
    for m in tuple.maps() {
        sum += singular_values(m)?.values[1];
    }
    Ok(sum.ln())
}

/// Certified upper bound `log sum_i sigma_1(A_i)^2` on the pressure at
/// `s = 2` of the tuple `(A_1 (x) I, ..., A_N (x) I)`.
pub fn pressure_at_two_upper<T: Real>(tuple: &MatrixTuple<T>) -> Result<T> {
    if tuple.dim() != 2 {
        return Err(Error::Domain(
            "the phi^2 bound is stated for two-dimensional tuples".into(),
        ));
    }
    let mut sum = T::zero();
    for &norm in tuple.operator_norms() {
        sum += norm * norm;
    }
    Ok(sum.ln())
}
