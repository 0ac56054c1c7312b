//! `qkgene`: gene selection and quantum-kernel SVM classification from the
//! command line. Exit codes: 0 success, 1 config, 2 data, 3 numerical.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qkgene::pipeline::{self, PipelineConfig};
use qkgene::synthetic::{planted, PlantedSpec};
use qkgene::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "qkgene", version, about = "Gene selection and quantum-kernel SVM classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the gene search on the training split; writes mask.csv and convergence.csv.
    Select(Common),
    /// SMOTE, PCA and phase scaling; writes pca.csv and reduced_*.csv.
    Reduce(Common),
    /// Quantum kernel matrices from the reduced data.
    Kernel(Common),
    /// Fit the SVM on kernel_train.csv; writes model.csv.
    Train(Common),
    /// Score model.csv on the held-out split; writes metrics.json and roc.csv.
    Evaluate(Common),
    /// Every stage in one process.
    RunAll(Common),
    /// Z, ZZ, Pauli and RBF kernels on one shared reduced input; writes compare.csv.
    CompareKernels(Common),
    /// Write a synthetic dataset with planted informative genes.
    Generate(Generate),
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(short, long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override a config key; repeatable and applied after the file.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Shorthand for `--set data.path=...`.
    #[arg(long, value_name = "CSV")]
    data: Option<PathBuf>,
    /// Shorthand for `--set output.dir=...`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Shorthand for `--set seed=...`.
    #[arg(long)]
    seed: Option<u64>,
    /// Shorthand for `--set select.enabled=false`.
    #[arg(long)]
    no_selection: bool,
}

#[derive(Debug, Args)]
struct Generate {
    /// Destination CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30)]
    positive: usize,
    #[arg(long, default_value_t = 30)]
    negative: usize,
    #[arg(long, default_value_t = 5)]
    informative: usize,
    #[arg(long, default_value_t = 195)]
    noise: usize,
    /// Class-mean gap on each informative gene, in noise standard deviations.
    #[arg(long, default_value_t = 2.0)]
    effect: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Common {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(p) = &self.data {
            cfg.set("data.path", &p.to_string_lossy())?;
        }
        if let Some(p) = &self.out {
            cfg.set("output.dir", &p.to_string_lossy())?;
        }
        if let Some(s) = self.seed {
            cfg.set("seed", &s.to_string())?;
        }
        if self.no_selection {
            cfg.set("select.enabled", "false")?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Select(c) => {
            let cfg = c.config()?;
            let res = pipeline::run_select(&cfg)?;
            println!(
                "selected {} of {} genes (fitness {})",
                res.best_mask.selected_count(),
                res.best_mask.len(),
                res.best_fitness
            );
        }
        Command::Reduce(c) => {
            let cfg = c.config()?;
            let r = pipeline::run_reduce(&cfg, cfg.use_selection)?;
            println!(
                "reduced {} genes to {} components ({} train rows, {} test rows)",
                r.mask.selected_count(),
                r.pca.n_components(),
                r.train.n_samples(),
                r.test_features.nrows()
            );
        }
        Command::Kernel(c) => {
            let cfg = c.config()?;
            let k = pipeline::run_kernel(&cfg)?;
            let n = k.train.len();
            println!("train kernel {n}x{n}, cross kernel {}x{}", k.cross.nrows(), k.cross.ncols());
            if k.repaired {
                eprintln!("note: negative eigenvalues clipped from the sampled train kernel");
            }
        }
        Command::Train(c) => {
            let cfg = c.config()?;
            let m = pipeline::run_train(&cfg)?;
            println!("{} support vectors, bias {}", m.support_indices.len(), m.bias);
        }
        Command::Evaluate(c) => {
            let cfg = c.config()?;
            print!("{}", pipeline::run_evaluate(&cfg, cfg.use_selection)?.to_json());
        }
        Command::RunAll(c) => {
            let cfg = c.config()?;
            print!("{}", pipeline::run_full(&cfg, cfg.use_selection)?.report.to_json());
        }
        Command::CompareKernels(c) => {
            let cfg = c.config()?;
            print!("{}", pipeline::run_compare_kernels(&cfg, cfg.use_selection)?.csv_body());
        }
        Command::Generate(g) => {
            let p = planted(&PlantedSpec {
                n_positive: g.positive,
                n_negative: g.negative,
                n_informative: g.informative,
                n_noise: g.noise,
                effect: g.effect,
                seed: g.seed,
            });
            qkgene::data_io::write_csv(&p.dataset, &g.out)?;
            let names: Vec<String> = p.informative.iter().map(|&i| p.dataset.gene_names()[i].clone()).collect();
            println!("informative genes: {}", names.join(","));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage mistakes are configuration errors
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn common(args: &[&str]) -> Common {
        let cli = Cli::try_parse_from([&["qkgene", "run-all"], args].concat()).unwrap();
        match cli.command {
            Command::RunAll(c) => c,
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn flags_override_set_values() {
        let cfg = common(&["--set", "seed=4", "--seed", "9", "-s", "pca.k = 3", "--no-selection"])
            .config()
            .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.pca_k, 3);
        assert!(!cfg.use_selection);
    }

    #[test]
    fn malformed_override_is_a_config_error() {
        let e = common(&["--set", "pca.k"]).config().unwrap_err();
        assert_eq!(e.exit_code(), 1);
        let e = common(&["--set", "bogus=1"]).config().unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
