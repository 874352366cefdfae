//! Image clustering on scattering features.
//!
//! The pipeline has three stages:
//!
//! 1. [`scattering`]: a two-layer Morlet scattering transform turns every
//!    zero-padded image into a translation-invariant feature vector.
//! 2. [`poc`]: PCA followed by projection onto the orthogonal complement of
//!    the few leading covariance eigenvectors, which are shared across
//!    classes and mostly carry intra-class variability.
//! 3. [`uspec`]: scalable spectral clustering on a sparse bipartite graph
//!    between samples and a small set of representatives, with the
//!    eigenproblem reduced to the representative side (transfer cut).
//!
//! [`ann`] provides the HNSW k-nearest-neighbor index used to build the
//! bipartite affinity, [`kmeans`] the shared Lloyd iteration, [`metrics`]
//! the ACC/NMI evaluation and [`pipeline`] the orchestration used by the
//! `pssc` command line tool.

// Links the OpenBLAS backend used by ndarray's matrix products.
extern crate blas_src;

pub mod ann;
pub mod datasets;
pub mod error;
pub mod features;
pub mod kmeans;
mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod poc;
pub mod scattering;
pub mod uspec;

pub use error::{Error, Result};
pub use features::{Domain, FeatureMatrix};
