use crime_lab::error::create_file;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crime_lab::analytics::{export_all, AnalyticsOptions, DEFAULT_CELL_SIZE};
use crime_lab::ingest::{ingest_csv, IngestOptions};
use crime_lab::runner::{
    compare_runs, fit_pipeline, generate_synthetic, load_dataset, run_experiment,
    write_comparison_csv, EvalReport, RunConfig, SyntheticSpec, TrainedPipeline,
};
use crime_lab::table::{CleaningPolicy, MissingRowAction};
use crime_lab::{Error, Result};

#[derive(Parser)]
#[command(
    name = "crime-lab",
    version,
    about = "Crime-incident classification experiments"
)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and encode a raw incident CSV into a binary table.
    Ingest {
        input: PathBuf,
        /// Keep rows with missing fields, filled with a sentinel.
        #[arg(long)]
        sentinel: bool,
        #[arg(long)]
        exclude_leaky: bool,
    },
    /// Write pivot tables and geo grids.
    Stats {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CELL_SIZE)]
        cell_size: f64,
    },
    /// Fit the configured pipeline on the whole dataset and save it.
    Train,
    /// Run the configured protocol and write reports, or score a saved pipeline.
    Evaluate {
        #[arg(long, requires = "input")]
        model: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Paired t-test between runs, one CSV row per pair.
    Compare {
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
    },
    /// Generate a Gaussian-blob dataset in the incident schema.
    Synth {
        /// Rows per class, e.g. 900,90,10.
        #[arg(long, value_delimiter = ',', required = true)]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        dims: usize,
        #[arg(long, default_value_t = 0.1)]
        spread: f64,
        #[arg(long)]
        noise: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn need_out(cli_out: &Option<PathBuf>) -> Result<&Path> {
    cli_out
        .as_deref()
        .ok_or_else(|| Error::Argument("--out is required".into()))
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if cli.out.is_some() {
        cfg.out_dir = cli.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest {
            input,
            sentinel,
            exclude_leaky,
        } => {
            let opts = IngestOptions {
                cleaning: CleaningPolicy {
                    missing_row_action: if *sentinel {
                        MissingRowAction::Sentinel
                    } else {
                        MissingRowAction::Drop
                    },
                    ..Default::default()
                },
                exclude_leaky_features: *exclude_leaky,
            };
            let out = ingest_csv(input, &opts)?;
            out.table.write_binary(need_out(&cli.out)?)?;
            print_json(&out.table.cleaning)
        }
        Command::Stats { input, cell_size } => {
            let opts = IngestOptions {
                cleaning: CleaningPolicy {
                    missing_row_action: MissingRowAction::Sentinel,
                    ..Default::default()
                },
                exclude_leaky_features: false,
            };
            let table = load_dataset(input, &opts)?;
            let files = export_all(
                &table,
                need_out(&cli.out)?,
                &AnalyticsOptions {
                    cell_size: *cell_size,
                    ..Default::default()
                },
            )?;
            files.iter().for_each(|f| println!("{}", f.display()));
            Ok(())
        }
        Command::Train => {
            let cfg = load_config(&cli)?;
            let out = need_out(&cli.out)?;
            let table = load_dataset(
                &cfg.dataset,
                &IngestOptions {
                    cleaning: cfg.cleaning,
                    exclude_leaky_features: cfg.exclude_leaky_features,
                },
            )?;
            let run = || fit_pipeline(&cfg, &table);
            let pipeline = match cfg.threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Internal(e.to_string()))?
                    .install(run)?,
                None => run()?,
            };
            pipeline.save(out)?;
            println!("{}", out.display());
            Ok(())
        }
        Command::Evaluate {
            model: Some(model),
            input,
        } => {
            let pipeline = TrainedPipeline::load(model)?;
            let cfg: RunConfig = serde_json::from_str(&pipeline.config_json)?;
            let path = input
                .as_deref()
                .ok_or_else(|| Error::Argument("--input is required".into()))?;
            let table = load_dataset(
                path,
                &IngestOptions {
                    cleaning: cfg.cleaning,
                    exclude_leaky_features: cfg.exclude_leaky_features,
                },
            )?;
            let eval = pipeline.evaluate(&table)?;
            match &cli.out {
                Some(p) => {
                    let mut w = BufWriter::new(create_file(p)?);
                    serde_json::to_writer_pretty(&mut w, &eval)?;
                    w.flush()?;
                    Ok(())
                }
                None => print_json(&eval),
            }
        }
        Command::Evaluate { model: None, .. } => {
            let cfg = load_config(&cli)?;
            let out = run_experiment(&cfg)?;
            if cfg.out_dir.is_none() {
                return print_json(&out.report);
            }
            out.files.iter().for_each(|f| println!("{}", f.display()));
            Ok(())
        }
        Command::Compare { reports } => {
            let loaded = reports
                .iter()
                .map(|p| EvalReport::load(p))
                .collect::<Result<Vec<_>>>()?;
            let mut rows = Vec::new();
            for i in 0..loaded.len() {
                for j in i + 1..loaded.len() {
                    rows.push(compare_runs(&loaded[i], &loaded[j])?);
                }
            }
            match &cli.out {
                Some(p) => write_comparison_csv(&rows, BufWriter::new(create_file(p)?)),
                None => write_comparison_csv(&rows, io::stdout().lock()),
            }
        }
        Command::Synth {
            counts,
            dims,
            spread,
            noise,
        } => {
            let spec = SyntheticSpec {
                counts: counts.clone(),
                dims: *dims,
                spread: *spread,
                seed: cli.seed.unwrap_or(crime_lab::runner::DEFAULT_SEED),
                background_noise: *noise,
            };
            let n = generate_synthetic(&spec, need_out(&cli.out)?)?;
            eprintln!("wrote {n} rows");
            Ok(())
        }
    }
}
