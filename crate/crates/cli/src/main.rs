//! `nbv`: scores per-facet photo-consistency over posed images, ranks
//! candidate camera poses by expected reconstruction gain, and runs a
//! synthetic closed planning loop end to end.

mod args;
mod commands;

use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NBV_LOG", "warn"))
        .format_timestamp(None)
        .init();
    if let Err(failure) = commands::run(args::Cli::parse().command) {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code);
    }
}
