use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use qwmap_core::data::DATA_DIR_ENV;
use qwmap_core::metrics::PocAnchor;
use qwmap_core::runner::{self, Approach, DEFAULT_LAYERS};
use qwmap_core::{plot, report, EmbeddingKind, ModelKind, RemapFunction, RunConfig, SweepConfig, TrainingConfig};

/// Weight re-mapping experiments for variational quantum classifiers.
#[derive(Parser, Debug)]
#[command(name = "qwmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one configuration.
    Run(RunArgs),
    /// Train a grid of datasets x approaches x seeds, then write the tables.
    Sweep(SweepArgs),
    /// Rebuild summary.csv and all tables from a result directory.
    Report(ResultArgs),
    /// Rebuild only the ANOVA tables.
    Anova(ResultArgs),
    /// Write learning-curve SVGs for a result directory.
    Plot(ResultArgs),
}

#[derive(Args, Debug, Default)]
struct Shared {
    /// Flat TOML file of option values; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding the UCI data files.
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Output directory [default: results]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    shared: Shared,
    #[arg(long)]
    dataset: Option<String>,
    /// angle or amplitude [default: angle]
    #[arg(long)]
    embedding: Option<String>,
    /// none, clamp, tanh, arctan, sigmoid, elu or sin [default: none]
    #[arg(long)]
    remap: Option<String>,
    /// Re-upload the embedding before every layer.
    #[arg(long)]
    reupload: bool,
    /// vqc or mlp [default: vqc]
    #[arg(long)]
    model: Option<String>,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    shared: Shared,
    /// Comma-separated dataset names.
    #[arg(long)]
    dataset: Option<String>,
    /// Comma-separated embeddings [default: angle]
    #[arg(long)]
    embedding: Option<String>,
    /// Comma-separated remap names, or `all` [default: all]
    #[arg(long)]
    remap: Option<String>,
    /// Sweep the re-uploading variants instead of the plain ones.
    #[arg(long)]
    reupload: bool,
    /// Comma-separated model kinds [default: vqc]
    #[arg(long)]
    model: Option<String>,
    /// `a..b` (inclusive), a single seed, or a comma list [default: 0..9]
    #[arg(long)]
    seeds: Option<String>,
    /// Concurrent cells; 0 picks the number of cores [default: 0]
    #[arg(long)]
    workers: Option<usize>,
    /// Where convergence differences are read: baseline or own [default: baseline]
    #[arg(long)]
    anchor: Option<String>,
}

#[derive(Args, Debug)]
struct ResultArgs {
    /// Result directory [default: results]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// baseline or own [default: baseline]
    #[arg(long)]
    anchor: Option<String>,
}

/// Keys accepted in a `--config` file.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dataset: Option<String>,
    data_dir: Option<PathBuf>,
    embedding: Option<String>,
    remap: Option<String>,
    reupload: Option<bool>,
    model: Option<String>,
    layers: Option<usize>,
    lr: Option<f64>,
    batch_size: Option<usize>,
    epochs: Option<usize>,
    seed: Option<u64>,
    seeds: Option<String>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    anchor: Option<String>,
}

fn read_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = std::fs::read_to_string(path).with_context(|| format!("cli: cannot read {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("cli: bad config file {}", path.display()))
}

/// `0..9` (inclusive), `0..=9`, `4` or `1,3,5`.
fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a > b {
            bail!("cli: empty seed range {text}");
        }
        return Ok((a..=b).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse::<u64>().with_context(|| format!("cli: bad seed '{s}'")))
        .collect()
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    text.split(',').map(|s| Ok(s.trim().parse::<T>()?)).collect()
}

fn parse_anchor(text: Option<String>) -> Result<PocAnchor> {
    match text.as_deref() {
        None | Some("baseline") => Ok(PocAnchor::Baseline),
        Some("own") => Ok(PocAnchor::Own),
        Some(other) => bail!("cli: unknown anchor '{other}' (expected baseline or own)"),
    }
}

struct Common {
    data_dir: Option<PathBuf>,
    n_layers: usize,
    training: TrainingConfig,
    out: PathBuf,
}

fn common(shared: Shared, file: &mut FileConfig) -> Common {
    let defaults = TrainingConfig::default();
    Common {
        data_dir: shared.data_dir.or(file.data_dir.take()),
        n_layers: shared.layers.or(file.layers).unwrap_or(DEFAULT_LAYERS),
        training: TrainingConfig {
            learning_rate: shared.lr.or(file.lr).unwrap_or(defaults.learning_rate),
            batch_size: shared.batch_size.or(file.batch_size).unwrap_or(defaults.batch_size),
            n_epochs: shared.epochs.or(file.epochs).unwrap_or(defaults.n_epochs),
            seed: 0,
        },
        out: shared.out.or(file.out.take()).unwrap_or_else(|| PathBuf::from("results")),
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut file = read_config(args.shared.config.as_deref())?;
    let c = common(args.shared, &mut file);
    let Some(dataset) = args.dataset.or(file.dataset) else { bail!("cli: --dataset is required") };
    let model: ModelKind = args.model.or(file.model).as_deref().unwrap_or("vqc").parse()?;
    let remap: RemapFunction = args.remap.or(file.remap).as_deref().unwrap_or("none").parse()?;
    let embedding: EmbeddingKind = args.embedding.or(file.embedding).as_deref().unwrap_or("angle").parse()?;
    let reupload = args.reupload || file.reupload.unwrap_or(false);
    let approach = match model {
        ModelKind::Vqc => Approach::vqc(remap, reupload),
        ModelKind::Mlp => Approach::mlp(),
    };
    let config = RunConfig {
        dataset,
        data_dir: c.data_dir,
        embedding,
        approach,
        n_layers: c.n_layers,
        training: TrainingConfig { seed: args.seed.or(file.seed).unwrap_or(0), ..c.training },
        out_dir: c.out,
    };
    let record = runner::run(&config)?;
    let last = record.n_epochs() - 1;
    println!(
        "{}: valid acc {:.4}, test acc {:.4} -> {}",
        record.key.stem(),
        record.valid_acc[last],
        record.test_acc,
        config.runs_dir().display()
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let mut file = read_config(args.shared.config.as_deref())?;
    let c = common(args.shared, &mut file);
    let Some(datasets) = args.dataset.or(file.dataset) else { bail!("cli: --dataset is required") };
    let datasets: Vec<String> = datasets.split(',').map(|s| s.trim().to_string()).collect();
    let embeddings: Vec<EmbeddingKind> = parse_list(args.embedding.or(file.embedding).as_deref().unwrap_or("angle"))?;
    let models: Vec<ModelKind> = parse_list(args.model.or(file.model).as_deref().unwrap_or("vqc"))?;
    let remaps: Vec<RemapFunction> = match args.remap.or(file.remap).as_deref() {
        None | Some("all") => RemapFunction::ALL.to_vec(),
        Some(list) => parse_list(list)?,
    };
    let reupload = args.reupload || file.reupload.unwrap_or(false);
    let mut approaches = Vec::new();
    for model in models {
        match model {
            ModelKind::Vqc => approaches.extend(remaps.iter().map(|&r| Approach::vqc(r, reupload))),
            ModelKind::Mlp => approaches.push(Approach::mlp()),
        }
    }
    let seeds = parse_seeds(args.seeds.or(file.seeds).as_deref().unwrap_or("0..9"))?;
    let config = SweepConfig {
        datasets,
        embeddings,
        approaches,
        seeds,
        n_layers: c.n_layers,
        training: c.training,
        data_dir: c.data_dir,
        out_dir: c.out,
        workers: args.workers.or(file.workers).unwrap_or(0),
        anchor: parse_anchor(args.anchor.or(file.anchor))?,
    };
    let outcome = runner::sweep(&config)?;
    let trained = outcome.cells.iter().filter(|(_, s)| *s == runner::CellStatus::Trained).count();
    let skipped = outcome.cells.iter().filter(|(_, s)| *s == runner::CellStatus::Skipped).count();
    let failed: Vec<_> = outcome.failures().collect();
    println!("{trained} trained, {skipped} already complete, {} failed", failed.len());
    for path in &outcome.written {
        println!("wrote {}", path.display());
    }
    if let Some((key, msg)) = failed.first() {
        bail!("{} cells failed, first {}: {msg}", failed.len(), key.stem());
    }
    Ok(())
}

fn result_dir(args: &ResultArgs) -> Result<(PathBuf, FileConfig)> {
    let mut file = read_config(args.config.as_deref())?;
    let out = args.out.clone().or(file.out.take()).unwrap_or_else(|| PathBuf::from("results"));
    Ok((out, file))
}

fn cmd_report(args: ResultArgs) -> Result<()> {
    let (out, file) = result_dir(&args)?;
    let anchor = parse_anchor(args.anchor.or(file.anchor))?;
    let records = runner::load_records(&out)?;
    let written = report::write_reports(&out, &records, anchor)?;
    runner::write_summary(&out, &records)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_anova(args: ResultArgs) -> Result<()> {
    let (out, _) = result_dir(&args)?;
    let records = runner::load_records(&out)?;
    for path in report::write_anova(&out, &records)? {
        print!("{}", std::fs::read_to_string(&path)?);
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_plot(args: ResultArgs) -> Result<()> {
    let (out, _) = result_dir(&args)?;
    let records = runner::load_records(&out)?;
    for path in plot::write_plots(&out, &records)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report(a),
        Command::Anova(a) => cmd_anova(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_specs() {
        assert_eq!(parse_seeds("0..9").unwrap(), (0..10).collect::<Vec<u64>>());
        assert_eq!(parse_seeds("2..=4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert_eq!(parse_seeds("1, 3,5").unwrap(), vec![1, 3, 5]);
        assert!(parse_seeds("5..2").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn config_file_keys() {
        let file: FileConfig = toml::from_str("dataset = \"iris\"\nlr = 0.05\nseeds = \"0..2\"\nreupload = true").unwrap();
        assert_eq!(file.dataset.as_deref(), Some("iris"));
        assert_eq!(file.lr, Some(0.05));
        assert!(toml::from_str::<FileConfig>("learning_rate = 0.1").is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut file = FileConfig { lr: Some(0.5), epochs: Some(3), ..Default::default() };
        let shared = Shared { lr: Some(0.1), ..Default::default() };
        let c = common(shared, &mut file);
        assert_eq!(c.training.learning_rate, 0.1);
        assert_eq!(c.training.n_epochs, 3);
        assert_eq!(c.n_layers, DEFAULT_LAYERS);
    }
}
