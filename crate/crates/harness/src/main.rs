use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use nearelastic::{config, experiments, io, Runner};

#[derive(Parser)]
#[command(name = "nearelastic", version, about = "Run nearly-elastic collision experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicas: Option<u64>,
        /// Worker threads; 1 runs serially. Defaults to one per core.
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit nonzero if any record fails.
        #[arg(long)]
        assert: bool,
    },
}

fn run(cli: Cli) -> Result<bool> {
    let Command::Run {
        config: path,
        seed,
        replicas,
        threads,
        out,
        assert,
    } = cli.command;
    let mut cfg = config::load(&path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = replicas {
        cfg.replicas = r;
    }
    cfg.assert |= assert;
    cfg.validate()?;
    let runner = Runner::new(threads)?;
    let output = experiments::run(&cfg, &runner)?;
    for r in &output.records {
        println!("{}", r.summary());
        if let Some(n) = &r.note {
            println!("    {n}");
        }
    }
    let dir = out.or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("results").join(cfg.experiment.id()));
    for f in io::write(&output, &dir)? {
        eprintln!("wrote {}", f.display());
    }
    Ok(!output.failed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more asserted records failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
