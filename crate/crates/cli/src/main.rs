use clap::Parser;
use dblab_cli::{config, emit, exit, run, CliError, ExperimentConfig, Format};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "dblab", version, about = "First-order operator laboratory for divergence-form elliptic problems")]
struct Args {
    #[arg(value_enum)]
    command: config::Subcommand,
    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; reports go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Solve outside the proven block class.
    #[arg(long)]
    force: bool,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn configure(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::for_subcommand(args.command),
    };
    cfg.subcommand = args.command;
    if let Some(n) = args.grid {
        cfg.grid.points = n;
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &args.out {
        cfg.output = Some(o.clone());
    }
    if let Some(f) = args.format {
        cfg.format = f;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.force |= args.force;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    dblab::init_sequential_kernels();
    let args = Args::parse();
    let code = match configure(&args).and_then(|cfg| {
        if args.print_config {
            println!("{}", cfg.to_json());
            return Ok(exit::OK);
        }
        let outcome = run(&cfg)?;
        let written = emit(&cfg, &outcome, &mut std::io::stdout().lock())?;
        for p in written.iter().chain(&outcome.artifacts) {
            log::info!("wrote {}", p.display());
        }
        for f in &outcome.failures {
            eprintln!("FAIL {} / {}: {}", f.stage, f.item, f.message);
        }
        Ok(outcome.exit_code())
    }) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
