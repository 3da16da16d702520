//! `hsr`: synthetic heatmap corpora, subpixel fitting, evaluation and the
//! attention gradient check.
//!
//! Set `HSR_THREADS` to pin the worker thread count. Output never depends on
//! it.

mod args;
mod attn;
mod bench;
mod eval;
mod fit;
mod gen;
mod loss;
mod paths;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

pub const THREADS_ENV: &str = "HSR_THREADS";

fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
    if threads == 0 {
        anyhow::bail!("{THREADS_ENV} must be a positive integer, got `{raw}`");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    init_threads()?;
    match cli.command {
        Command::Gen(a) => gen::run(&a).map(|()| true),
        Command::Fit(a) => fit::run(&a).map(|()| true),
        Command::Eval(a) => eval::run(&a).map(|()| true),
        Command::Bench(a) => bench::run(&a).map(|()| true),
        Command::Loss(a) => loss::run(&a).map(|()| true),
        Command::AttnCheck(a) => attn::run(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
