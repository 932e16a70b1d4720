use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use edgecache::harness::{
    parse_config, report, run_suite, seed_csv_path, suite::format_summary, suite_configs,
    Checkpoint, Experiment, MetricsWriter,
};
use edgecache::oracle::{oracle_joint, OracleBudget};
use edgecache::rng::{stream, Stream};
use edgecache::sim::{sample_channels, sample_requests, sample_topology};

#[derive(Parser)]
#[command(name = "edgecache", version, about = "Joint edge caching and transmission experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm for one seed.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Save a checkpoint here every `--checkpoint-every` iterations.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        checkpoint_every: usize,
        /// Continue from a checkpoint, appending to the run's CSV.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run every listed algorithm over every seed and summarise.
    Suite {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve one sampled snapshot exhaustively.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Summarise the merged CSVs in a results directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 100)]
        window: usize,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            out,
            checkpoint,
            checkpoint_every,
            resume,
        } => {
            let mut cfg = parse_config(&config)?;
            if let Some(out) = out {
                cfg.output = out;
            }
            let mut experiment = match &resume {
                Some(path) => {
                    let exp = Checkpoint::load(path)
                        .with_context(|| format!("loading {}", path.display()))?
                        .experiment;
                    if exp.config().sim != cfg.sim || exp.config().algorithm != cfg.algorithm {
                        bail!("checkpoint was taken with a different configuration");
                    }
                    exp
                }
                None => {
                    let seed = seed.unwrap_or_else(|| cfg.seed_list()[0]);
                    Experiment::new(cfg.clone(), seed)?
                }
            };
            std::fs::create_dir_all(&cfg.output)?;
            let csv = seed_csv_path(&cfg.output, cfg.algorithm, experiment.seed());
            let mut writer = if resume.is_some() {
                MetricsWriter::append(&csv)?
            } else {
                MetricsWriter::create(&csv)?
            };
            let ckpt = checkpoint.as_deref().map(|p| (p, checkpoint_every));
            let rows = experiment.run(Some(&mut writer), ckpt)?;
            if let Some(last) = rows.last() {
                println!(
                    "{} seed {}: {} iterations, final total delay {:.6} s, hit ratio {:.3}",
                    last.algorithm,
                    last.seed,
                    last.iteration,
                    last.total_delay_s,
                    last.hit_ratio
                );
            }
            println!("metrics written to {}", csv.display());
        }
        Command::Suite { config } => {
            let cfg = parse_config(&config)?;
            let summary = run_suite(&suite_configs(&cfg))?;
            print!("{}", format_summary(&summary));
            println!("results in {}", cfg.output.display());
        }
        Command::Oracle { config, seed } => {
            let cfg = parse_config(&config)?;
            let seed = seed.unwrap_or_else(|| cfg.seed_list()[0]);
            let topo = sample_topology(&cfg.sim, &mut stream(seed, Stream::Topology))?;
            let mut rng = stream(seed, Stream::Traffic);
            let req = sample_requests(&cfg.sim, &topo, &mut rng);
            let ch = sample_channels(&cfg.sim, &topo, &mut rng);
            let best = oracle_joint(
                &cfg.sim,
                &topo,
                &req,
                &ch,
                OracleBudget {
                    max_configs: cfg.oracle_budget,
                },
            )?;
            println!("users: {}, requests: {:?}", topo.num_users(), req.files().iter().map(|f| f.0).collect::<Vec<_>>());
            for (e, files) in best.cache.file_lists().iter().enumerate() {
                println!("edge {e}: {:?}", files.iter().map(|f| f.0).collect::<Vec<_>>());
            }
            println!("modes: {:?}", best.association.modes());
            println!("minimum total delay: {:.9} s", best.total_delay);
        }
        Command::Report { input, window } => {
            let summary = report(&input, window)?;
            print!("{}", format_summary(&summary));
        }
    }
    Ok(())
}
