//! The JSON configuration format: dimension, affine maps with row-major
//! linear parts, an optional projection, free-form labels, and optional
//! Kronecker factor data for the factorised projected bound.

use affdim::linalg::Matrix;
use affdim::pressure::MatrixTuple;
use affdim::structure::AffineIfs;
use affdim::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapSpec {
    /// Row-major `d*d` entries.
    pub linear: Vec<f64>,
    pub translation: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KroneckerFactors {
    /// Row-major 2x2 first factors, one per map.
    pub base_a: Vec<Vec<f64>>,
    /// Row-major 2x2 second factors, one per map.
    pub base_b: Vec<Vec<f64>>,
    /// Row-major 2x2 rank-one projection `P` (the full projection applied
    /// to the system is `I (x) P`).
    pub p: Vec<f64>,
}

/// Decoded Kronecker factor data: first factors, second factors, and the
/// rank-one `P`.
pub type KronTuples = (MatrixTuple<f64>, MatrixTuple<f64>, Matrix<f64>);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IfsConfig {
    pub dimension: usize,
    pub maps: Vec<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kronecker: Option<KroneckerFactors>,
}

fn matrix_from_flat(d: usize, flat: &[f64], what: &str) -> Result<Matrix<f64>> {
    if flat.len() != d * d {
        return Err(Error::Shape(format!(
            "{what}: expected {d}x{d} = {} row-major entries, got {}",
            d * d,
            flat.len()
        )));
    }
    Matrix::from_row_major(d, d, flat.to_vec())
}

impl IfsConfig {
    /// Schema validation beyond what serde enforces.
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::Shape("dimension must be >= 1".into()));
        }
        if self.maps.len() < 2 {
            return Err(Error::Shape(format!(
                "a configuration needs at least 2 maps, got {}",
                self.maps.len()
            )));
        }
        let d = self.dimension;
        for (i, m) in self.maps.iter().enumerate() {
            if m.linear.len() != d * d {
                return Err(Error::Shape(format!(
                    "map {}: linear part has {} entries, expected {}",
                    i + 1,
                    m.linear.len(),
                    d * d
                )));
            }
            if m.translation.len() != d {
                return Err(Error::Shape(format!(
                    "map {}: translation has length {}, expected {d}",
                    i + 1,
                    m.translation.len()
                )));
            }
        }
        if let Some(p) = &self.projection {
            if p.len() != d * d {
                return Err(Error::Shape(format!(
                    "projection has {} entries, expected {}",
                    p.len(),
                    d * d
                )));
            }
        }
        if let Some(kron) = &self.kronecker {
            if kron.base_a.len() != self.maps.len() || kron.base_b.len() != self.maps.len() {
                return Err(Error::Shape(
                    "kronecker factors must list one 2x2 matrix per map".into(),
                ));
            }
            for m in kron.base_a.iter().chain(&kron.base_b) {
                if m.len() != 4 {
                    return Err(Error::Shape(
                        "kronecker factors must be row-major 2x2 (4 entries)".into(),
                    ));
                }
            }
            if kron.p.len() != 4 {
                return Err(Error::Shape("kronecker p must be 2x2 (4 entries)".into()));
            }
        }
        Ok(())
    }

    pub fn tuple(&self) -> Result<MatrixTuple<f64>> {
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(i, m)| matrix_from_flat(self.dimension, &m.linear, &format!("map {}", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        MatrixTuple::new(maps)
    }

    pub fn ifs(&self) -> Result<AffineIfs<f64>> {
        let translations = self.maps.iter().map(|m| m.translation.clone()).collect();
        AffineIfs::new(self.tuple()?, translations)
    }

    pub fn projection_matrix(&self) -> Result<Option<Matrix<f64>>> {
        self.projection
            .as_ref()
            .map(|p| matrix_from_flat(self.dimension, p, "projection"))
            .transpose()
    }

    pub fn kron_tuples(&self) -> Result<Option<KronTuples>> {
        let Some(kron) = &self.kronecker else {
            return Ok(None);
        };
        let base_a = kron
            .base_a
            .iter()
            .map(|m| matrix_from_flat(2, m, "kronecker base_a"))
            .collect::<Result<Vec<_>>>()?;
        let base_b = kron
            .base_b
            .iter()
            .map(|m| matrix_from_flat(2, m, "kronecker base_b"))
            .collect::<Result<Vec<_>>>()?;
        let p = matrix_from_flat(2, &kron.p, "kronecker p")?;
        Ok(Some((
            MatrixTuple::new(base_a)?,
            MatrixTuple::new(base_b)?,
            p,
        )))
    }
}

/// Load and validate a configuration; also returns the SHA-256 of the raw
/// bytes for the report echo.
pub fn load_config(path: &std::path::Path) -> Result<(IfsConfig, String)> {
    let bytes = std::fs::read(path)?;
    let config: IfsConfig = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Shape(format!("config parse error: {e}")))?;
    config.validate()?;
    use sha2::Digest;
    let digest = hex::encode(sha2::Sha256::digest(&bytes));
    Ok((config, digest))
}
