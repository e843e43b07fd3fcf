//! On-disk cache for the KL eigenpairs: a flat little-endian f64 array file
//! (eigenvalues, then eigenfunctions column by column) plus a JSON sidecar
//! recording the grid, covariance parameters, layout and a SHA-256 checksum.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::arrayfile::{read_f64_array, write_f64_array};
use crate::error::{Error, Result};

use super::KlBasis;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KlCacheConfig {
    pub grid_size: usize,
    pub dt: f64,
    pub count: usize,
    pub covariance_family: String,
    pub variance: f64,
    pub correlation_length: f64,
    pub smoothness: f64,
    pub layout: String,
    pub checksum_sha256: String,
}

fn paths(cache_dir: &Path, grid_size: usize) -> (PathBuf, PathBuf) {
    let stem = format!("kl_whittle_matern_{grid_size}");
    (
        cache_dir.join(format!("{stem}.bin")),
        cache_dir.join(format!("{stem}.json")),
    )
}

impl KlBasis {
    /// Loads the eigenpairs from `cache_dir` when a valid cache exists,
    /// otherwise solves the eigenproblem and writes the cache. With
    /// `build_if_missing = false` a missing or invalid cache is an error.
    pub fn load_or_build(
        cache_dir: &Path,
        grid_size: usize,
        build_if_missing: bool,
    ) -> Result<Arc<Self>> {
        let (bin_path, json_path) = paths(cache_dir, grid_size);
        if bin_path.exists() && json_path.exists() {
            match Self::load(&bin_path, &json_path, grid_size) {
                Ok(basis) => return Ok(Arc::new(basis)),
                Err(err) if build_if_missing => {
                    eprintln!(
                        "warning: ignoring invalid KL cache at {}: {err}",
                        bin_path.display()
                    );
                }
                Err(err) => return Err(err),
            }
        } else if !build_if_missing {
            return Err(Error::Sidecar(format!(
                "KL eigenpair cache not found at {} and building is disabled",
                bin_path.display()
            )));
        }
        let basis = Self::build(grid_size)?;
        basis.store(cache_dir)?;
        Ok(Arc::new(basis))
    }

    pub fn store(&self, cache_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(cache_dir)?;
        let (bin_path, json_path) = paths(cache_dir, self.grid_size());
        let m = self.grid_size();
        let k = self.count();
        let mut values = Vec::with_capacity(k + m * k);
        values.extend(self.eigenvalues.iter());
        for col in 0..k {
            values.extend(self.functions.column(col).iter());
        }
        let checksum = write_f64_array(&bin_path, &values)?;
        let config = KlCacheConfig {
            grid_size: m,
            dt: self.dt,
            count: k,
            covariance_family: "whittle_matern".into(),
            variance: 1.0,
            correlation_length: 0.1,
            smoothness: 1.5,
            layout: "eigenvalues then eigenfunctions column-major".into(),
            checksum_sha256: checksum,
        };
        let json = serde_json::to_string_pretty(&config)
            .map_err(|e| Error::Sidecar(e.to_string()))?;
        std::fs::write(json_path, json)?;
        Ok(())
    }

    fn load(bin_path: &Path, json_path: &Path, grid_size: usize) -> Result<Self> {
        let sidecar = std::fs::read_to_string(json_path)?;
        let config: KlCacheConfig =
            serde_json::from_str(&sidecar).map_err(|e| Error::Sidecar(e.to_string()))?;
        if config.grid_size != grid_size {
            return Err(Error::Sidecar(format!(
                "cache grid size {} does not match requested {grid_size}",
                config.grid_size
            )));
        }
        if config.covariance_family != "whittle_matern"
            || config.variance != 1.0
            || config.correlation_length != 0.1
            || config.smoothness != 1.5
        {
            return Err(Error::Sidecar(
                "cache was built for different covariance parameters".into(),
            ));
        }
        let values = read_f64_array(bin_path, Some(&config.checksum_sha256))?;
        let m = config.grid_size;
        let k = config.count;
        if values.len() != k + m * k {
            return Err(Error::Sidecar(format!(
                "cache payload has {} values, expected {}",
                values.len(),
                k + m * k
            )));
        }
        let eigenvalues = DVector::from_column_slice(&values[..k]);
        let functions = DMatrix::from_column_slice(m, k, &values[k..]);
        let dt = 1.0 / (m as f64 - 1.0);
        let grid: Vec<f64> = (0..m).map(|i| i as f64 * dt).collect();
        Ok(Self {
            grid,
            dt,
            eigenvalues,
            functions,
        })
    }
}
