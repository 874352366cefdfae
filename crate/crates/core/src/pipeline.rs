//! End-to-end orchestration: load, pad, scatter, reduce, cluster, evaluate.
//!
//! Configuration is plain `key = value` text whose keys are the kebab-case
//! names of [`PipelineConfig`] fields; the command line uses the same names
//! as flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::ann::HnswParams;
use crate::datasets::{self, ImageSet};
use crate::error::{Error, Result};
use crate::features::{Domain, FeatureMatrix};
use crate::kmeans::{kmeans, DEFAULT_MAX_ITER, DEFAULT_N_INIT};
use crate::metrics::{accuracy, nmi, ClusterResult};
use crate::poc::{self, Spectrum};
use crate::scattering::{scatter_dataset, FilterBank};
use crate::uspec::{uspec_with, UspecParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    /// Training and test splits together.
    Mnist,
    MnistTest,
    Usps,
    /// Training and test splits together.
    FashionMnist,
    Csv,
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnist" => Ok(Self::Mnist),
            "mnist-test" => Ok(Self::MnistTest),
            "usps" => Ok(Self::Usps),
            "fashion-mnist" => Ok(Self::FashionMnist),
            "csv" => Ok(Self::Csv),
            _ => Err(Error::Parameter(format!("unknown dataset {s:?}"))),
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mnist => "mnist",
            Self::MnistTest => "mnist-test",
            Self::Usps => "usps",
            Self::FashionMnist => "fashion-mnist",
            Self::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Clusterer {
    Uspec,
    Kmeans,
}

impl FromStr for Clusterer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uspec" => Ok(Self::Uspec),
            "kmeans" => Ok(Self::Kmeans),
            _ => Err(Error::Parameter(format!("unknown clusterer {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct PipelineConfig {
    pub dataset: DatasetKind,
    pub data_dir: PathBuf,
    /// Input file for `dataset = csv`.
    pub csv_path: Option<PathBuf>,
    pub j: usize,
    pub l: usize,
    pub pad_size: usize,
    /// Leading eigenvectors kept; 0 keeps the full feature dimension.
    pub pca_dim: usize,
    pub poc_n: usize,
    pub p_prime: usize,
    pub p: usize,
    pub knn: usize,
    /// Defaults to the number of classes in the dataset.
    pub clusters: Option<usize>,
    pub seed: u64,
    pub trials: usize,
    pub use_scattering: bool,
    pub use_poc: bool,
    pub clusterer: Clusterer,
    pub hnsw_m: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    /// Report JSON path.
    pub out: Option<PathBuf>,
    /// Feature cache for the scattering (or pixel) stage.
    pub cache: Option<PathBuf>,
    pub class_a: usize,
    pub class_b: usize,
    pub angles: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let hnsw = HnswParams::default();
        Self {
            dataset: DatasetKind::MnistTest,
            data_dir: PathBuf::from("data"),
            csv_path: None,
            j: 3,
            l: 8,
            pad_size: 32,
            pca_dim: 1000,
            poc_n: 2,
            p_prime: 9000,
            p: 1000,
            knn: 5,
            clusters: None,
            seed: 0,
            trials: 5,
            use_scattering: true,
            use_poc: true,
            clusterer: Clusterer::Uspec,
            hnsw_m: hnsw.m,
            ef_construction: hnsw.ef_construction,
            ef_search: hnsw.ef_search,
            out: None,
            cache: None,
            class_a: 0,
            class_b: 2,
            angles: 5,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parameter(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Parameter(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

impl PipelineConfig {
    /// Sets one field by its kebab-case name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "dataset" => self.dataset = value.parse()?,
            "data-dir" => self.data_dir = PathBuf::from(value),
            "csv-path" => self.csv_path = Some(PathBuf::from(value)),
            "j" => self.j = parse(key, value)?,
            "l" => self.l = parse(key, value)?,
            "pad-size" => self.pad_size = parse(key, value)?,
            "pca-dim" => self.pca_dim = parse(key, value)?,
            "poc-n" => self.poc_n = parse(key, value)?,
            "p-prime" => self.p_prime = parse(key, value)?,
            "p" => self.p = parse(key, value)?,
            "knn" => self.knn = parse(key, value)?,
            "clusters" => self.clusters = Some(parse(key, value)?),
            "seed" => self.seed = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "use-scattering" => self.use_scattering = parse_bool(key, value)?,
            "use-poc" => self.use_poc = parse_bool(key, value)?,
            "clusterer" => self.clusterer = value.parse()?,
            "hnsw-m" => self.hnsw_m = parse(key, value)?,
            "ef-construction" => self.ef_construction = parse(key, value)?,
            "ef-search" => self.ef_search = parse(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "cache" => self.cache = Some(PathBuf::from(value)),
            "class-a" => self.class_a = parse(key, value)?,
            "class-b" => self.class_b = parse(key, value)?,
            "angles" => self.angles = parse(key, value)?,
            _ => return Err(Error::Parameter(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format(format!("config line {}", n + 1), "expected key = value"))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    pub fn hnsw(&self) -> HnswParams {
        HnswParams {
            m: self.hnsw_m,
            ef_construction: self.ef_construction,
            ef_search: self.ef_search,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        if self.dataset == DatasetKind::Csv && self.csv_path.is_none() {
            return Err(Error::Parameter("dataset csv needs csv-path".into()));
        }
        if self.knn == 0 || self.knn > self.p {
            return Err(Error::Parameter(format!("knn = {} outside [1, p = {}]", self.knn, self.p)));
        }
        if self.p >= self.p_prime {
            return Err(Error::Parameter(format!("p = {} must be below p' = {}", self.p, self.p_prime)));
        }
        if self.use_poc && self.pca_dim != 0 && self.poc_n >= self.pca_dim {
            return Err(Error::Parameter(format!(
                "poc-n = {} leaves nothing of pca-dim = {}",
                self.poc_n, self.pca_dim
            )));
        }
        Ok(())
    }
}

/// Error tagged with the pipeline stage it came from.
#[derive(Debug, thiserror::Error)]
#[error("stage {stage}: {source}")]
pub struct StageError {
    pub stage: &'static str,
    #[source]
    pub source: Error,
}

fn tag<T>(stage: &'static str, r: Result<T>) -> std::result::Result<T, StageError> {
    r.map_err(|source| StageError { stage, source })
}

fn lap(name: &str, clock: &mut Instant, stages: &mut BTreeMap<String, f64>) {
    *stages.entry(name.to_string()).or_insert(0.0) += clock.elapsed().as_secs_f64();
    *clock = Instant::now();
}

fn idx_pair(dir: &Path, prefix: &str) -> Result<ImageSet> {
    datasets::load_idx(
        &dir.join(format!("{prefix}-images-idx3-ubyte")),
        Some(&dir.join(format!("{prefix}-labels-idx1-ubyte"))),
    )
}

/// Reads the configured dataset from `data-dir`.
pub fn load_dataset(config: &PipelineConfig) -> Result<ImageSet> {
    let root = &config.data_dir;
    match config.dataset {
        DatasetKind::MnistTest => idx_pair(&root.join("mnist"), "t10k"),
        DatasetKind::Mnist => idx_pair(&root.join("mnist"), "train")?.concat(idx_pair(&root.join("mnist"), "t10k")?),
        DatasetKind::FashionMnist => {
            let dir = root.join("fashion-mnist");
            idx_pair(&dir, "train")?.concat(idx_pair(&dir, "t10k")?)
        }
        DatasetKind::Usps => datasets::load_usps(&root.join("usps").join("usps.csv")),
        DatasetKind::Csv => {
            let path = config
                .csv_path
                .as_ref()
                .ok_or_else(|| Error::Parameter("dataset csv needs csv-path".into()))?;
            datasets::load_csv_images(path)
        }
    }
}

/// Scattering coefficients (or raw pixels when scattering is disabled) of
/// the padded images, read from or written to `cache` when given.
pub fn extract_features(set: &ImageSet, config: &PipelineConfig, cache: Option<&Path>) -> Result<FeatureMatrix> {
    let (domain, dim) = if config.use_scattering {
        let bank = FilterBank::new(config.pad_size, config.j, config.l)?;
        (Domain::Scattering, bank.output_dim())
    } else {
        (Domain::Image, config.pad_size * config.pad_size)
    };
    if let Some(path) = cache {
        if path.exists() {
            let cached = FeatureMatrix::read_cache(path, domain)?;
            if cached.dim() == dim && cached.n_samples() == set.len() {
                return Ok(cached);
            }
        }
    }
    let features = if config.use_scattering {
        scatter_dataset(set, &FilterBank::new(config.pad_size, config.j, config.l)?)?
    } else {
        set.to_feature_matrix()
    };
    if let Some(path) = cache {
        features.write_cache(path)?;
    }
    Ok(features)
}

/// PCA to `pca-dim` and, when enabled, removal of the `poc-n` leading
/// directions, both from one eigendecomposition.
pub fn reduce_features(spectrum: &Spectrum, features: &FeatureMatrix, config: &PipelineConfig) -> Result<FeatureMatrix> {
    let keep = if config.pca_dim == 0 {
        features.dim()
    } else {
        config.pca_dim.min(features.dim())
    };
    if config.use_poc {
        if config.poc_n >= keep {
            return Err(Error::Parameter(format!(
                "poc-n = {} leaves nothing of {keep} dimensions",
                config.poc_n
            )));
        }
        FeatureMatrix::new(spectrum.project(features, config.poc_n, keep)?, Domain::Poc)
    } else {
        FeatureMatrix::new(spectrum.project(features, 0, keep)?, Domain::Pca)
    }
}

/// Runs the configured clusterer once. `p'` is capped at N.
pub fn cluster_features(features: &FeatureMatrix, n_clusters: usize, config: &PipelineConfig, seed: u64) -> Result<ClusterResult> {
    match config.clusterer {
        Clusterer::Uspec => uspec_with(
            features,
            &UspecParams {
                n_clusters,
                p_prime: config.p_prime.min(features.n_samples()),
                p: config.p,
                k: config.knn,
                hnsw: config.hnsw(),
                seed,
            },
        ),
        Clusterer::Kmeans => {
            let start = Instant::now();
            let fit = kmeans(features.samples(), n_clusters, DEFAULT_MAX_ITER, DEFAULT_N_INIT, seed)?;
            let mut r = ClusterResult::new(fit.assignments, n_clusters)?;
            r.timing.insert("kmeans".into(), start.elapsed().as_secs_f64());
            Ok(r)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub seed: u64,
    pub acc: Option<f64>,
    pub nmi: Option<f64>,
    pub stage_seconds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub n_samples: usize,
    pub feature_dim: usize,
    pub trials: Vec<TrialReport>,
    pub stage_seconds: BTreeMap<String, f64>,
    pub total_seconds: f64,
    /// One entry per trial, in seed order.
    pub assignments: Vec<ClusterResult>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl PipelineReport {
    pub fn seeds(&self) -> Vec<u64> {
        self.trials.iter().map(|t| t.seed).collect()
    }

    /// Mean and population standard deviation of ACC, if labeled.
    pub fn acc(&self) -> Option<(f64, f64)> {
        let v: Option<Vec<f64>> = self.trials.iter().map(|t| t.acc).collect();
        v.map(|v| mean_std(&v))
    }

    pub fn nmi(&self) -> Option<(f64, f64)> {
        let v: Option<Vec<f64>> = self.trials.iter().map(|t| t.nmi).collect();
        v.map(|v| mean_std(&v))
    }

    pub fn to_json(&self) -> Value {
        let metric = |m: Option<(f64, f64)>, i: usize| match m {
            Some(pair) => json!(if i == 0 { pair.0 } else { pair.1 }),
            None => json!("unlabeled"),
        };
        json!({
            "config": self.config,
            "n_samples": self.n_samples,
            "feature_dim": self.feature_dim,
            "acc_mean": metric(self.acc(), 0),
            "acc_std": metric(self.acc(), 1),
            "nmi_mean": metric(self.nmi(), 0),
            "nmi_std": metric(self.nmi(), 1),
            "stage_seconds": self.stage_seconds,
            "total_seconds": self.total_seconds,
            "seeds": self.seeds(),
            "trials": self.trials,
        })
    }

    /// Writes the JSON report to `path` and one `sample,cluster` CSV per
    /// trial next to it, named `<stem>_assignments_seed<seed>.csv`.
    pub fn write(&self, path: &Path) -> Result<Vec<PathBuf>> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let text = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
        let mut written = vec![path.to_path_buf()];
        for (trial, result) in self.trials.iter().zip(&self.assignments) {
            let csv = path.with_file_name(format!("{stem}_assignments_seed{}.csv", trial.seed));
            std::fs::write(&csv, result.to_csv()).map_err(|e| Error::io(&csv, e))?;
            written.push(csv);
        }
        Ok(written)
    }
}

/// Executes every enabled stage and repeats clustering for seeds
/// `seed, seed + 1, …`. Writes the report when `out` is set.
pub fn run_pipeline(config: &PipelineConfig) -> std::result::Result<PipelineReport, StageError> {
    tag("config", config.validate())?;
    let total = Instant::now();
    let mut stages = BTreeMap::new();
    let mut clock = Instant::now();

    let set = tag("load", load_dataset(config))?;
    lap("load", &mut clock, &mut stages);
    let set = tag("pad", datasets::pad_and_normalize(&set, config.pad_size))?;
    lap("pad", &mut clock, &mut stages);
    let features = tag(
        if config.use_scattering { "scattering" } else { "pixels" },
        extract_features(&set, config, config.cache.as_deref()),
    )?;
    lap(if config.use_scattering { "scattering" } else { "pixels" }, &mut clock, &mut stages);
    let spectrum = tag("pca", poc::eigendecompose(&features))?;
    let reduced = tag(if config.use_poc { "poc" } else { "pca" }, reduce_features(&spectrum, &features, config))?;
    drop(spectrum);
    lap(if config.use_poc { "pca+poc" } else { "pca" }, &mut clock, &mut stages);

    let n_clusters = config.clusters.unwrap_or(set.n_classes());
    let labels = set.labels();
    let mut trials = Vec::with_capacity(config.trials);
    let mut assignments = Vec::with_capacity(config.trials);
    for t in 0..config.trials as u64 {
        let seed = config.seed + t;
        let result = tag("cluster", cluster_features(&reduced, n_clusters, config, seed))?;
        let (acc, nmi_value) = match labels {
            Some(y) => (
                Some(tag("metrics", accuracy(y, &result.assignments))?),
                Some(tag("metrics", nmi(y, &result.assignments))?),
            ),
            None => (None, None),
        };
        for (stage, secs) in &result.timing {
            *stages.entry(format!("cluster.{stage}")).or_insert(0.0) += secs;
        }
        trials.push(TrialReport {
            seed,
            acc,
            nmi: nmi_value,
            stage_seconds: result.timing.clone(),
        });
        assignments.push(result);
    }

    let report = PipelineReport {
        config: config.clone(),
        n_samples: reduced.n_samples(),
        feature_dim: reduced.dim(),
        trials,
        stage_seconds: stages,
        total_seconds: total.elapsed().as_secs_f64(),
        assignments,
    };
    if let Some(out) = &config.out {
        tag("report", report.write(out))?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct DomainDiagnostics {
    /// ℓ₁-normalized covariance eigenvalues, non-increasing.
    pub spectrum: Vec<f64>,
    /// Eigenvalues needed to reach half of the total variance.
    pub half_variance_prefix: usize,
    /// Principal angles in degrees between the two class subspaces.
    pub angles: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub class_a: usize,
    pub class_b: usize,
    pub image: DomainDiagnostics,
    pub scattering: DomainDiagnostics,
}

fn domain_diagnostics(m: &FeatureMatrix, a: &[usize], b: &[usize], count: usize) -> Result<DomainDiagnostics> {
    let spectrum = poc::spectrum_report(m)?;
    let u = poc::class_subspace(m, a, count)?;
    let v = poc::class_subspace(m, b, count)?;
    Ok(DomainDiagnostics {
        half_variance_prefix: poc::variance_prefix_len(&spectrum, 0.5),
        angles: poc::principal_angles(u.view(), v.view(), count)?,
        spectrum,
    })
}

/// Covariance spectra and class-subspace principal angles in the image and
/// scattering domains. With `out` set, writes `spectrum_image.csv`,
/// `spectrum_scattering.csv` and `diagnostics.json` into that directory.
pub fn run_diagnostics(config: &PipelineConfig) -> std::result::Result<DiagnosticsReport, StageError> {
    let set = tag("load", load_dataset(config))?;
    let set = tag("pad", datasets::pad_and_normalize(&set, config.pad_size))?;
    if set.labels().is_none() {
        return Err(StageError {
            stage: "load",
            source: Error::InsufficientData("diagnostics need a labeled dataset".into()),
        });
    }
    let a = set.class_indices(config.class_a);
    let b = set.class_indices(config.class_b);
    for (class, idx) in [(config.class_a, &a), (config.class_b, &b)] {
        if idx.len() < 2 {
            return Err(StageError {
                stage: "classes",
                source: Error::Degenerate(format!("class {class} has {} samples", idx.len())),
            });
        }
    }
    let pixels = set.to_feature_matrix();
    let image = tag("image", domain_diagnostics(&pixels, &a, &b, config.angles))?;
    drop(pixels);
    let scattering_config = PipelineConfig {
        use_scattering: true,
        ..config.clone()
    };
    let features = tag("scattering", extract_features(&set, &scattering_config, config.cache.as_deref()))?;
    let scattering = tag("scattering", domain_diagnostics(&features, &a, &b, config.angles))?;
    let report = DiagnosticsReport {
        class_a: config.class_a,
        class_b: config.class_b,
        image,
        scattering,
    };
    if let Some(dir) = &config.out {
        tag("report", write_diagnostics(&report, dir))?;
    }
    Ok(report)
}

fn write_diagnostics(report: &DiagnosticsReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    poc::write_spectrum_csv(&report.image.spectrum, &dir.join("spectrum_image.csv"))?;
    poc::write_spectrum_csv(&report.scattering.spectrum, &dir.join("spectrum_scattering.csv"))?;
    let summary = json!({
        "class_a": report.class_a,
        "class_b": report.class_b,
        "image": {
            "half_variance_prefix": report.image.half_variance_prefix,
            "angles_degrees": report.image.angles,
        },
        "scattering": {
            "half_variance_prefix": report.scattering.half_variance_prefix,
            "angles_degrees": report.scattering.angles,
        },
    });
    let path = dir.join("diagnostics.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}
