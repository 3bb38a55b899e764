//! Constructors for the two explicit four-dimensional families and a
//! one-command verification pipeline for the Kronecker-quad family.
//!
//! The quad family takes 2x2 entrywise positive factors `A` and `B` and
//! forms `M_1 = M_2 = A (x) B`, `M_3 = M_4 = A^T (x) B^T`. With `A` of
//! small norm and determinant bounded below, and `B` close enough to the
//! identity, the tuple is strongly irreducible and proximal of all orders,
//! separates on the ball `B(0, 3/2)` with standard-basis translations, and
//! its attractor projects onto planes of the form `I (x) P` with a strict
//! drop below the affinity dimension.
//!
//! The shear-rotation family scales `[[1,3],[0,1]] (x) R_theta` by
//! `1/sqrt(14)` and pairs it with its transpose; the drop under `I (x) P`
//! is large enough to be visible in a rendering.

use crate::error::{Error, Result};
use crate::linalg::{kronecker, Matrix};
use crate::pressure::{
    affinity_dimension, kron_projected_bound, pressure_at_one_lower, pressure_at_two_upper,
    DimensionBracket, MatrixTuple,
};
use crate::scalar::{real, Real};
use crate::structure::{
    admissibility_check, proximality_check, strong_separation_certificate,
    tensor_strong_irreducibility, AffineIfs, CertificateReport,
};
use crate::wordspace::VisitOptions;
use serde::{Deserialize, Serialize};

/// The four-map Kronecker family `(A(x)B, A(x)B, A^T(x)B^T, A^T(x)B^T)`.
///
/// `M_1 = M_2` and `M_3 = M_4` hold exactly by construction, and `M_3` is
/// the entrywise transpose of `M_1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorQuadInstance<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    tuple: MatrixTuple<T>,
    translations: Vec<Vec<T>>,
}

fn standard_basis<T: Real>(d: usize) -> Vec<Vec<T>> {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect()
}

impl<T: Real> TensorQuadInstance<T> {
    /// Assemble the four-map tuple; admissibility is checked separately,
    /// not enforced here. Default translations are the standard basis.
    pub fn new(a: Matrix<T>, b: Matrix<T>, translations: Option<Vec<Vec<T>>>) -> Result<Self> {
        for (name, m) in [("A", &a), ("B", &b)] {
            if m.rows() != 2 || m.cols() != 2 {
                return Err(Error::Shape(format!(
                    "{name} must be 2x2, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let m1 = kronecker(&a, &b);
        let m3 = m1.transpose();
        let tuple = MatrixTuple::new(vec![m1.clone(), m1, m3.clone(), m3])?;
        let translations = translations.unwrap_or_else(|| standard_basis(4));
        if translations.len() != 4 || translations.iter().any(|v| v.len() != 4) {
            return Err(Error::Shape("translations must be four 4-vectors".into()));
        }
        Ok(TensorQuadInstance {
            a,
            b,
            tuple,
            translations,
        })
    }

    pub fn tuple(&self) -> &MatrixTuple<T> {
        &self.tuple
    }

    pub fn translations(&self) -> &[Vec<T>] {
        &self.translations
    }

    pub fn ifs(&self) -> Result<AffineIfs<T>> {
        AffineIfs::new(self.tuple.clone(), self.translations.clone())
    }

    /// The two-dimensional base tuple `(A, A, A^T, A^T)`.
    pub fn base_a(&self) -> Result<MatrixTuple<T>> {
        MatrixTuple::new(vec![
            self.a.clone(),
            self.a.clone(),
            self.a.transpose(),
            self.a.transpose(),
        ])
    }

    /// The second-factor tuple `(B, B, B^T, B^T)`.
    pub fn base_b(&self) -> Result<MatrixTuple<T>> {
        MatrixTuple::new(vec![
            self.b.clone(),
            self.b.clone(),
            self.b.transpose(),
            self.b.transpose(),
        ])
    }
}

/// The two-map shear-rotation family: `M_1 = (1/sqrt(14)) C (x) R_theta`
/// with `C = [[1,3],[0,1]]`, and `M_2 = M_1^T` exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShearRotationInstance<T> {
    pub theta: T,
    pub m1: Matrix<T>,
    pub m2: Matrix<T>,
    tuple: MatrixTuple<T>,
    pub v1: Vec<T>,
    pub v2: Vec<T>,
    /// Strong irreducibility of this family needs `theta` to be an
    /// irrational multiple of pi; recorded, not certified here.
    pub irrationality_note: String,
}

pub fn shear_matrix<T: Real>() -> Matrix<T> {
    Matrix::from_rows(&[&[T::one(), real::<T>(3.0)], &[T::zero(), T::one()]])
}

/// A verified admissible factor pair for the quad family:
/// `A = [[0.32, 0.004], [0.002, 0.318]]` has `sigma_1 = 0.32216... < 1/3`,
/// `det = 0.101752 > 1/10` and eigenvalues `0.322, 0.316`;
/// `B = I + [[0, e], [e/3, 0]]` with `e = 0.01` keeps the eigenvalue
/// ratio of `B` (1.01161...) below that of `A` (1.01899...) and
/// `|A| |B| = 0.32431... <= 1/3`, so the standard-basis ball separation
/// certificate goes through as well.
#[allow(clippy::approx_constant)] // 0.318 is an admissibility margin, not 1/pi
pub fn admissible_example_pair<T: Real>() -> (Matrix<T>, Matrix<T>) {
    let a = Matrix::from_rows(&[
        &[real::<T>(0.32), real::<T>(0.004)],
        &[real::<T>(0.002), real::<T>(0.318)],
    ]);
    let eps = real::<T>(0.01);
    let b = Matrix::from_rows(&[&[T::one(), eps], &[eps / real::<T>(3.0), T::one()]]);
    (a, b)
}

impl<T: Real> ShearRotationInstance<T> {
    pub fn new(theta: T, v1: Option<Vec<T>>, v2: Option<Vec<T>>) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::Domain("theta must be finite".into()));
        }
        let c = shear_matrix::<T>();
        let r = Matrix::rotation2(theta);
        let scale = T::one() / real::<T>(14.0).sqrt();
        let m1 = kronecker(&c, &r).scale(scale);
        let m2 = m1.transpose();
        let tuple = MatrixTuple::new(vec![m1.clone(), m2.clone()])?;
        let v1 = v1.unwrap_or_else(|| vec![T::zero(); 4]);
        let v2 = v2.unwrap_or_else(|| vec![T::one(), T::zero(), T::one(), T::zero()]);
        if v1.len() != 4 || v2.len() != 4 {
            return Err(Error::Shape("translations must be 4-vectors".into()));
        }
        Ok(ShearRotationInstance {
            theta,
            m1,
            m2,
            tuple,
            v1,
            v2,
            irrationality_note:
                "strong irreducibility requires theta to be an irrational multiple of pi".into(),
        })
    }

    pub fn tuple(&self) -> &MatrixTuple<T> {
        &self.tuple
    }

    pub fn ifs(&self) -> Result<AffineIfs<T>> {
        AffineIfs::new(self.tuple.clone(), vec![self.v1.clone(), self.v2.clone()])
    }

    /// First factors `(C, C^T)` scaled by `1/sqrt(14)`.
    pub fn base_shear(&self) -> Result<MatrixTuple<T>> {
        let c = shear_matrix::<T>();
        let scale = T::one() / real::<T>(14.0).sqrt();
        MatrixTuple::new(vec![c.scale(scale), c.transpose().scale(scale)])
    }

    /// Second factors `(R_theta, R_theta^T)`.
    pub fn base_rotation(&self) -> Result<MatrixTuple<T>> {
        let r = Matrix::rotation2(self.theta);
        MatrixTuple::new(vec![r.clone(), r.transpose()])
    }
}

/// Composite report of the quad-family verification pipeline, in run order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorQuadReport<T> {
    pub admissibility: CertificateReport<T>,
    pub tensor_irreducibility: CertificateReport<T>,
    pub proximality: Vec<CertificateReport<T>>,
    pub separation: CertificateReport<T>,
    pub dimaff: DimensionBracket<T>,
    /// `(angle, bracket)` for the sweep of rank-one projection directions;
    /// the bound is constant across the sweep since only `|P| = 1` enters.
    pub projected_bounds: Vec<(T, DimensionBracket<T>)>,
    pub pressure_one_lower: T,
    pub pressure_two_upper: T,
    /// Smallest-bracket evidence for the projected drop:
    /// `dimaff.lower - max_j projected_bounds[j].upper`. Positive values
    /// exhibit the strict gap; the quantity is empirical in that both ends
    /// are finite-level envelope zeros, not the limits themselves.
    pub gap_margin: T,
    pub level: usize,
    pub seed: u64,
}

impl<T: Real> TensorQuadReport<T> {
    /// True when every certificate is CERTIFIED and both pressure
    /// inequalities and the gap margin come out with the expected signs.
    pub fn all_pass(&self) -> bool {
        self.admissibility.is_certified()
            && self.tensor_irreducibility.is_certified()
            && self.proximality.iter().all(|r| r.is_certified())
            && self.separation.is_certified()
            && self.pressure_one_lower > T::zero()
            && self.pressure_two_upper < T::zero()
            && self.gap_margin > T::zero()
    }
}

pub const PROJECTION_SWEEP_ANGLES: usize = 16;
const PROXIMALITY_SEARCH_LEN: usize = 4;
const PROXIMALITY_MARGIN: f64 = 1e-3;

/// Run the full verification pipeline on a quad instance: admissibility
/// gate, tensor strong-irreducibility certificate, proximality at
/// k = 1, 2, 3, the ball separation certificate, the affinity-dimension
/// bracket, the projected-bound sweep over rank-one directions, and the
/// two endpoint pressure bounds.
pub fn certify_tensor_quad<T: Real>(
    instance: &TensorQuadInstance<T>,
    n: usize,
    tol: T,
    seed: u64,
    opts: &VisitOptions,
) -> Result<TensorQuadReport<T>> {
    let admissibility = admissibility_check(&instance.a, &instance.b)?;
    if !admissibility.is_certified() {
        return Err(Error::Precondition(format!(
            "admissibility gate failed: {}",
            admissibility.detail
        )));
    }

    let tensor_irreducibility = tensor_strong_irreducibility(&instance.a, &instance.b)?;

    let mut proximality = Vec::new();
    for k in 1..=3 {
        proximality.push(proximality_check(
            instance.tuple(),
            k,
            PROXIMALITY_SEARCH_LEN,
            real::<T>(PROXIMALITY_MARGIN),
        )?);
    }

    let ifs = instance.ifs()?;
    let separation = strong_separation_certificate(&ifs, &[T::zero(); 4], real::<T>(1.5))?;

    let dimaff = affinity_dimension(instance.tuple(), n, tol, opts)?;

    let base_a = instance.base_a()?;
    let base_b = instance.base_b()?;
    let mut projected_bounds = Vec::with_capacity(PROJECTION_SWEEP_ANGLES);
    for j in 0..PROJECTION_SWEEP_ANGLES {
        let angle =
            T::PI() * T::from_usize(j).unwrap() / T::from_usize(PROJECTION_SWEEP_ANGLES).unwrap();
        let (s, c) = angle.sin_cos();
        let p = Matrix::from_rows(&[&[c * c, c * s], &[s * c, s * s]]);
        let bound = kron_projected_bound(&base_a, &base_b, &p, n, tol, opts)?;
        projected_bounds.push((angle, bound));
    }

    let pressure_one_lower = pressure_at_one_lower(&base_a)?;
    let pressure_two_upper = pressure_at_two_upper(&base_a)?;

    let worst_bound = projected_bounds
        .iter()
        .map(|(_, b)| b.upper)
        .fold(T::neg_infinity(), T::max);
    let gap_margin = dimaff.lower - worst_bound;

    Ok(TensorQuadReport {
        admissibility,
        tensor_irreducibility,
        proximality,
        separation,
        dimaff,
        projected_bounds,
        pressure_one_lower,
        pressure_two_upper,
        gap_margin,
        level: n,
        seed,
    })
}
