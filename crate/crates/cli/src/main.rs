use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pssc::pipeline::{run_diagnostics, run_pipeline, PipelineConfig};

/// Image clustering with scattering features, POC and scalable spectral clustering.
#[derive(Parser)]
#[command(name = "pssc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the clustering pipeline and write a JSON report.
    Cluster(Options),
    /// Write covariance spectra and class-subspace principal angles.
    Diagnose(Options),
}

/// Every flag overrides the key of the same name from `--config`.
#[derive(Args)]
struct Options {
    /// Plain `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// mnist, mnist-test, usps, fashion-mnist or csv.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    data_dir: Option<String>,
    #[arg(long)]
    csv_path: Option<String>,
    #[arg(long)]
    j: Option<String>,
    #[arg(long)]
    l: Option<String>,
    #[arg(long)]
    pad_size: Option<String>,
    #[arg(long)]
    pca_dim: Option<String>,
    #[arg(long)]
    poc_n: Option<String>,
    #[arg(long)]
    p_prime: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    knn: Option<String>,
    #[arg(long)]
    clusters: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    use_scattering: Option<String>,
    #[arg(long)]
    use_poc: Option<String>,
    /// uspec or kmeans.
    #[arg(long)]
    clusterer: Option<String>,
    #[arg(long)]
    hnsw_m: Option<String>,
    #[arg(long)]
    ef_construction: Option<String>,
    #[arg(long)]
    ef_search: Option<String>,
    /// Report file for `cluster`, output directory for `diagnose`.
    #[arg(long)]
    out: Option<String>,
    /// Feature cache file.
    #[arg(long)]
    cache: Option<String>,
    #[arg(long)]
    class_a: Option<String>,
    #[arg(long)]
    class_b: Option<String>,
    #[arg(long)]
    angles: Option<String>,
}

impl Options {
    fn into_config(self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?,
            None => PipelineConfig::default(),
        };
        let overrides = [
            ("dataset", self.dataset),
            ("data-dir", self.data_dir),
            ("csv-path", self.csv_path),
            ("j", self.j),
            ("l", self.l),
            ("pad-size", self.pad_size),
            ("pca-dim", self.pca_dim),
            ("poc-n", self.poc_n),
            ("p-prime", self.p_prime),
            ("p", self.p),
            ("knn", self.knn),
            ("clusters", self.clusters),
            ("seed", self.seed),
            ("trials", self.trials),
            ("use-scattering", self.use_scattering),
            ("use-poc", self.use_poc),
            ("clusterer", self.clusterer),
            ("hnsw-m", self.hnsw_m),
            ("ef-construction", self.ef_construction),
            ("ef-search", self.ef_search),
            ("out", self.out),
            ("cache", self.cache),
            ("class-a", self.class_a),
            ("class-b", self.class_b),
            ("angles", self.angles),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                config.set(key, &value).with_context(|| format!("--{key}"))?;
            }
        }
        Ok(config)
    }
}

fn fmt_metric(m: Option<(f64, f64)>) -> String {
    match m {
        Some((mean, std)) => format!("{mean:.4} ± {std:.4}"),
        None => "unlabeled".into(),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Cluster(opts) => {
            let config = opts.into_config()?;
            let report = run_pipeline(&config)?;
            println!("samples  {} (dim {})", report.n_samples, report.feature_dim);
            println!("seeds    {:?}", report.seeds());
            println!("ACC      {}", fmt_metric(report.acc()));
            println!("NMI      {}", fmt_metric(report.nmi()));
            for (stage, secs) in &report.stage_seconds {
                println!("time     {stage:<24} {secs:>9.2} s");
            }
            println!("total    {:.2} s", report.total_seconds);
            if config.out.is_none() {
                println!("{}", serde_json::to_string_pretty(&report.to_json())?);
            }
        }
        Command::Diagnose(opts) => {
            let config = opts.into_config()?;
            let report = run_diagnostics(&config)?;
            for (name, d) in [("image", &report.image), ("scattering", &report.scattering)] {
                let angles: Vec<String> = d.angles.iter().map(|a| format!("{a:.1}")).collect();
                println!(
                    "{name:<10} 50% variance in {:>4} eigenvalues; angles {} vs {}: [{}]",
                    d.half_variance_prefix,
                    report.class_a,
                    report.class_b,
                    angles.join(", ")
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
