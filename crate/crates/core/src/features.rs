//! Column-per-sample feature matrices and their on-disk cache.
//!
//! Cache layout (all little-endian):
//!
//! ```text
//! offset  size     field
//! 0       8        magic "PSSCFEAT"
//! 8       8        D (u64), feature dimension
//! 16      8        N (u64), number of samples
//! 24      8·D·N    f64 entries, column-major (sample 0 first)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2, ShapeBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 8] = b"PSSCFEAT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Image,
    Scattering,
    Pca,
    Poc,
}

/// A D×N real matrix, one column per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Array2<f64>,
    domain: Domain,
}

impl FeatureMatrix {
    /// Wraps a D×N matrix. Every entry must be finite.
    pub fn new(data: Array2<f64>, domain: Domain) -> Result<Self> {
        if let Some(((row, col), v)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Range(format!(
                "non-finite feature {v} at dimension {row} of sample {col}"
            )));
        }
        Ok(Self { data, domain })
    }

    /// Builds from an N×D matrix whose rows are samples.
    pub fn from_samples(samples: Array2<f64>, domain: Domain) -> Result<Self> {
        Self::new(samples.reversed_axes(), domain)
    }

    pub(crate) fn from_parts_unchecked(data: Array2<f64>, domain: Domain) -> Self {
        Self { data, domain }
    }

    pub fn empty(dim: usize, domain: Domain) -> Self {
        Self {
            data: Array2::zeros((dim, 0).f()),
            domain,
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// The D×N matrix.
    pub fn data(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    pub fn column(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.column(i)
    }

    /// N×D view with samples as rows.
    pub fn samples(&self) -> ArrayView2<'_, f64> {
        self.data.t()
    }

    /// Owned N×D row-major copy, convenient for per-sample slices.
    pub fn samples_owned(&self) -> Array2<f64> {
        self.data.t().as_standard_layout().into_owned()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_samples(&self, indices: &[usize]) -> FeatureMatrix {
        let data = self.data.select(ndarray::Axis(1), indices);
        Self {
            data,
            domain: self.domain,
        }
    }

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
        put(CACHE_MAGIC)?;
        put(&(self.dim() as u64).to_le_bytes())?;
        put(&(self.n_samples() as u64).to_le_bytes())?;
        for col in self.data.columns() {
            for v in col.iter() {
                put(&v.to_le_bytes())?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_cache(path: &Path, domain: Domain) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        let mut r = BufReader::new(file);
        let mut header = [0u8; 24];
        r.read_exact(&mut header)
            .map_err(|_| Error::format("cache header", "file shorter than 24 bytes"))?;
        if &header[..8] != CACHE_MAGIC {
            return Err(Error::format("cache magic", "expected \"PSSCFEAT\""));
        }
        let dim = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
        let n = u64::from_le_bytes(header[16..24].try_into().unwrap()) as usize;
        let expected = dim
            .checked_mul(n)
            .and_then(|c| c.checked_mul(8))
            .and_then(|c| c.checked_add(24))
            .ok_or_else(|| Error::format("cache shape", "D·N overflows"))?;
        if expected as u64 != len {
            return Err(Error::format(
                "cache payload",
                format!("header declares {dim}x{n} but file has {len} bytes"),
            ));
        }
        let mut bytes = vec![0u8; dim * n * 8];
        r.read_exact(&mut bytes).map_err(|e| Error::io(path, e))?;
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let data = Array2::from_shape_vec((dim, n).f(), values)
            .map_err(|e| Error::format("cache payload", e.to_string()))?;
        Self::new(data, domain)
    }
}
