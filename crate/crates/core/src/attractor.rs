//! Attractor sampling, planar projection of samples, box-counting slope
//! estimation, and grayscale density rendering.
//!
//! Sampling is either the chaos game (uniform map choice from a seeded
//! generator, fixed burn-in, bitwise reproducible) or the full
//! deterministic image set `T_w(x*)` over all words of a given depth,
//! rooted at the fixed point of the first map so every emitted point lies
//! on the attractor exactly.

use crate::error::{Error, Result};
use crate::linalg::{svd, Matrix};
use crate::pressure::rank;
use crate::scalar::{real, Real};
use crate::structure::AffineIfs;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const CHAOS_BURN_IN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleMode {
    Chaos { count: usize, seed: u64 },
    Deterministic { depth: usize },
}

/// A batch of sampled points, stored flat in row-major point order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointCloud<T> {
    dim: usize,
    coords: Vec<T>,
    pub provenance: SampleMode,
}

impl<T: Real> PointCloud<T> {
    pub fn new(dim: usize, coords: Vec<T>, provenance: SampleMode) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "coordinate buffer of length {} does not hold a nonzero number \
                 of {dim}-dimensional points",
                coords.len()
            )));
        }
        if !coords.iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("cloud has non-finite coordinates".into()));
        }
        Ok(PointCloud {
            dim,
            coords,
            provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[T]> {
        self.coords.chunks_exact(self.dim)
    }
}

/// Sample the attractor of a contracting affine system.
pub fn sample_attractor<T: Real>(
    ifs: &AffineIfs<T>,
    mode: SampleMode,
    budget: u64,
) -> Result<PointCloud<T>> {
    if let Some(i) = ifs.linear().first_non_contracting() {
        return Err(Error::Precondition(format!(
            "map {i} has operator norm >= 1; the attractor is defined for \
             contracting systems only"
        )));
    }
    let d = ifs.dim();
    let x_star = ifs.fixed_point(0)?;
    match mode {
        SampleMode::Chaos { count, seed } => {
            if count == 0 {
                return Err(Error::Domain("chaos sample count must be >= 1".into()));
            }
            if count as u64 > budget {
                return Err(Error::Budget(format!(
                    "chaos sample count {count} exceeds the budget {budget}; \
                     raise it with --budget"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut x = x_star;
            for _ in 0..CHAOS_BURN_IN {
                let i = rng.gen_range(0..ifs.arity());
                x = ifs.apply(i, &x);
            }
            let mut coords = Vec::with_capacity(count * d);
            for _ in 0..count {
                let i = rng.gen_range(0..ifs.arity());
                x = ifs.apply(i, &x);
                coords.extend_from_slice(&x);
            }
            PointCloud::new(d, coords, mode)
        }
        SampleMode::Deterministic { depth } => {
            if depth == 0 {
                return Err(Error::Domain("deterministic depth must be >= 1".into()));
            }
            let mut total = 1u128;
            for _ in 0..depth {
                total = total.saturating_mul(ifs.arity() as u128);
            }
            if total > budget as u128 {
                return Err(Error::Budget(format!(
                    "deterministic depth {depth} needs {total} points, exceeding \
                     the budget {budget}; raise it with --budget"
                )));
            }
            let mut coords = Vec::with_capacity(total as usize * d);
            // stack of composed affine maps (M_w, t_w); extending a word on
            // the right composes on the right
            fn rec<T: Real>(
                ifs: &AffineIfs<T>,
                depth: usize,
                m: &Matrix<T>,
                t: &[T],
                level: usize,
                x_star: &[T],
                coords: &mut Vec<T>,
            ) {
                for i in 0..ifs.arity() {
                    let mi = ifs.linear().map(i);
                    let m_next = m.mul(mi);
                    let mut t_next = m.mul_vec(&ifs.translations()[i]);
                    for (a, b) in t_next.iter_mut().zip(t) {
                        *a += *b;
                    }
                    if level + 1 == depth {
                        let mut p = m_next.mul_vec(x_star);
                        for (a, b) in p.iter_mut().zip(&t_next) {
                            *a += *b;
                        }
                        coords.extend_from_slice(&p);
                    } else {
                        rec(ifs, depth, &m_next, &t_next, level + 1, x_star, coords);
                    }
                }
            }
            let id = Matrix::identity(d);
            let zero = vec![T::zero(); d];
            rec(ifs, depth, &id, &zero, 0, &x_star, &mut coords);
            PointCloud::new(d, coords, mode)
        }
    }
}

/// Project a cloud through a rank-2 matrix `Q` and express the images in an
/// orthonormal basis of the range of `Q`, so planar distances equal the
/// distances of the images `Qx`.
pub fn project_points<T: Real>(cloud: &PointCloud<T>, q: &Matrix<T>) -> Result<PointCloud<T>> {
    let d = cloud.dim();
    if q.rows() != d || q.cols() != d {
        return Err(Error::Shape(format!(
            "projection must be {d}x{d}, got {}x{}",
            q.rows(),
            q.cols()
        )));
    }
    let r = rank(q)?;
    if r != 2 {
        return Err(Error::Domain(format!(
            "planar projection requires rank 2, got rank {r}"
        )));
    }
    let f = svd(q)?;
    // first two left singular vectors span the range of Q
    let basis: Vec<Vec<T>> = (0..2)
        .map(|j| (0..d).map(|i| f.u[(i, j)]).collect())
        .collect();
    let mut coords = Vec::with_capacity(cloud.len() * 2);
    for p in cloud.iter_points() {
        let qp = q.mul_vec(p);
        for b in &basis {
            let dot = qp
                .iter()
                .zip(b)
                .map(|(&a, &c)| a * c)
                .fold(T::zero(), |x, y| x + y);
            coords.push(dot);
        }
    }
    PointCloud::new(2, coords, cloud.provenance)
}

/// Occupied-box counts over dyadic scales and the fitted log-log slope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxCountReport<T> {
    /// Box side lengths `2^-j` relative to the normalised unit square.
    pub scales: Vec<T>,
    pub counts: Vec<u64>,
    /// Least-squares slope of `log N` against `log(1/delta)` over the
    /// retained window.
    pub slope: T,
    /// Indices into `scales` that survived the saturation cut
    /// (counts <= points/100).
    pub window: Vec<usize>,
}

pub const BOX_COUNT_COARSEST_LEVEL: usize = 3;
pub const BOX_COUNT_MAX_LEVEL: usize = 14;

/// Count occupied dyadic boxes of the cloud normalised into the unit
/// square, at side lengths `2^-j` for `j = 3..=finest_level`, and fit the
/// box-dimension slope over the scales that are not sample-starved.
pub fn box_count<T: Real>(cloud: &PointCloud<T>, finest_level: usize) -> Result<BoxCountReport<T>> {
    if cloud.dim() != 2 {
        return Err(Error::Shape(format!(
            "box counting runs on planar clouds, got dimension {}",
            cloud.dim()
        )));
    }
    if !(BOX_COUNT_COARSEST_LEVEL..=BOX_COUNT_MAX_LEVEL).contains(&finest_level) {
        return Err(Error::Domain(format!(
            "finest level must lie in {BOX_COUNT_COARSEST_LEVEL}..={BOX_COUNT_MAX_LEVEL}"
        )));
    }
    // normalise to the unit square with a common scale (isotropy preserved)
    let mut min = [T::infinity(); 2];
    let mut max = [T::neg_infinity(); 2];
    for p in cloud.iter_points() {
        for a in 0..2 {
            min[a] = min[a].min(p[a]);
            max[a] = max[a].max(p[a]);
        }
    }
    let extent = (max[0] - min[0]).max(max[1] - min[1]);
    if extent <= T::zero() {
        return Err(Error::Estimation(
            "the cloud is a single point; box counting needs spatial extent".into(),
        ));
    }

    let points = cloud.len() as u64;
    let mut scales = Vec::new();
    let mut counts = Vec::new();
    let mut keys: Vec<u64> = Vec::with_capacity(cloud.len());
    for j in BOX_COUNT_COARSEST_LEVEL..=finest_level {
        let cells = 1u64 << j;
        let cells_t = T::from_u64(cells).unwrap();
        keys.clear();
        for p in cloud.iter_points() {
            let ix = ((p[0] - min[0]) / extent * cells_t)
                .floor()
                .to_u64()
                .unwrap_or(0)
                .min(cells - 1);
            let iy = ((p[1] - min[1]) / extent * cells_t)
                .floor()
                .to_u64()
                .unwrap_or(0)
                .min(cells - 1);
            keys.push(ix * cells + iy);
        }
        keys.sort_unstable();
        keys.dedup();
        scales.push(T::one() / cells_t);
        counts.push(keys.len() as u64);
    }

    // retention: drop scales where boxes would outnumber samples/100,
    // where occupancy saturates at the sample count instead of the set
    let window: Vec<usize> = (0..counts.len())
        .filter(|&i| counts[i] * 100 <= points)
        .collect();
    if window.len() < 3 {
        return Err(Error::Estimation(format!(
            "only {} scales retained under the saturation cut (counts <= points/100); \
             sample more points or lower the finest level",
            window.len()
        )));
    }
    // ordinary least squares of log N against log(1/delta) = j log 2
    let ln2 = real::<T>(2.0).ln();
    let n = T::from_usize(window.len()).unwrap();
    let mut sx = T::zero();
    let mut sy = T::zero();
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for &i in &window {
        let x = T::from_usize(BOX_COUNT_COARSEST_LEVEL + i).unwrap() * ln2;
        let y = T::from_u64(counts[i]).unwrap().ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(BoxCountReport {
        scales,
        counts,
        slope,
        window,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityMode {
    /// `log(1 + hits)` normalised; default, since occupancy is heavy-tailed.
    Log,
    Linear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageSpec<T> {
    pub width: usize,
    pub height: usize,
    /// `(x_min, y_min, x_max, y_max)` window mapped onto the image.
    pub bounds: (T, T, T, T),
    pub density: DensityMode,
}

impl<T: Real> ImageSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.width < 16 || self.height < 16 {
            return Err(Error::Domain(format!(
                "image must be at least 16x16, got {}x{}",
                self.width, self.height
            )));
        }
        let (x0, y0, x1, y1) = self.bounds;
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::Domain(format!(
                "degenerate bounds ({x0}, {y0}, {x1}, {y1})"
            )));
        }
        Ok(())
    }

    /// Bounds hugging the cloud with a 2% margin.
    pub fn fit_bounds(cloud: &PointCloud<T>) -> Result<(T, T, T, T)> {
        if cloud.dim() != 2 {
            return Err(Error::Shape("bounds fitting expects a planar cloud".into()));
        }
        let mut min = [T::infinity(); 2];
        let mut max = [T::neg_infinity(); 2];
        for p in cloud.iter_points() {
            for a in 0..2 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        let pad =
            real::<T>(0.02) * ((max[0] - min[0]).max(max[1] - min[1])).max(T::min_positive_value());
        Ok((min[0] - pad, min[1] - pad, max[0] + pad, max[1] + pad))
    }
}

/// Rasterise a planar cloud to grayscale bytes (row-major, top row first).
pub fn rasterize<T: Real>(cloud: &PointCloud<T>, spec: &ImageSpec<T>) -> Result<Vec<u8>> {
    spec.validate()?;
    if cloud.dim() != 2 {
        return Err(Error::Shape("rendering expects a planar cloud".into()));
    }
    let (x0, y0, x1, y1) = spec.bounds;
    let w = spec.width;
    let h = spec.height;
    let wt = T::from_usize(w).unwrap();
    let ht = T::from_usize(h).unwrap();
    let mut hits = vec![0u64; w * h];
    for p in cloud.iter_points() {
        if p[0] < x0 || p[0] > x1 || p[1] < y0 || p[1] > y1 {
            continue;
        }
        let px = ((p[0] - x0) / (x1 - x0) * wt)
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(w - 1);
        let py = ((p[1] - y0) / (y1 - y0) * ht)
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(h - 1);
        hits[(h - 1 - py) * w + px] += 1;
    }
    let max_hits = hits.iter().copied().max().unwrap_or(0);
    let mut bytes = vec![0u8; w * h];
    if max_hits > 0 {
        match spec.density {
            DensityMode::Log => {
                let denom = (T::one() + T::from_u64(max_hits).unwrap()).ln();
                for (b, &c) in bytes.iter_mut().zip(&hits) {
                    if c > 0 {
                        let v = (T::one() + T::from_u64(c).unwrap()).ln() / denom;
                        *b = (v * real::<T>(255.0)).round().to_u8().unwrap_or(255);
                    }
                }
            }
            DensityMode::Linear => {
                for (b, &c) in bytes.iter_mut().zip(&hits) {
                    if c > 0 {
                        let v = T::from_u64(c).unwrap() / T::from_u64(max_hits).unwrap();
                        *b = (v * real::<T>(255.0)).round().to_u8().unwrap_or(255);
                    }
                }
            }
        }
    }
    Ok(bytes)
}

/// Write grayscale pixels to `path`: binary PGM (P5) by default, PNG with
/// identical pixel values when the extension is `.png`.
pub fn write_gray_image(width: usize, height: usize, bytes: &[u8], path: &Path) -> Result<()> {
    if bytes.len() != width * height {
        return Err(Error::Shape(format!(
            "{} bytes do not fill a {width}x{height} image",
            bytes.len()
        )));
    }
    let is_png = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("png"))
        .unwrap_or(false);
    if is_png {
        let img = image::GrayImage::from_raw(width as u32, height as u32, bytes.to_vec())
            .expect("buffer length checked above");
        img.save(path)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    } else {
        let mut f = std::fs::File::create(path)?;
        write!(f, "P5\n{width} {height}\n255\n")?;
        f.write_all(bytes)?;
    }
    Ok(())
}

/// Rasterise and write in one step.
pub fn render<T: Real>(cloud: &PointCloud<T>, spec: &ImageSpec<T>, path: &Path) -> Result<()> {
    let bytes = rasterize(cloud, spec)?;
    write_gray_image(spec.width, spec.height, &bytes, path)
}
