//! `riverbank`: segment paired scenes, map erosion and accretion, and report areas.

mod args;
mod cmd;
mod config;
mod output;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};
use output::exit_code;

fn main() -> ExitCode {
    let argv: Vec<_> = std::env::args_os().collect();
    let command = Cli::command();
    let argv = match config::merge_config(&command, argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match command
        .try_get_matches_from(argv)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };

    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(4);
        }
    }

    let result = std::panic::catch_unwind(|| run(cli));
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(4),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Segment(a) => cmd::segment::run(a),
        Command::Diff(a) => cmd::change::diff(a),
        Command::Quantify(a) => cmd::change::quantify_cmd(a),
        Command::Pipeline(a) => cmd::change::pipeline(a),
        Command::Evaluate(a) => cmd::evaluate::run(a),
        Command::Loss(a) => cmd::loss::run(a),
        Command::Split(a) => cmd::dataset::split(a, seed),
        Command::Augment(a) => cmd::dataset::augment(a, seed),
        Command::Report(a) => cmd::report::run(a),
        Command::Man(a) => cmd::man(a, Cli::command()),
    }
}
