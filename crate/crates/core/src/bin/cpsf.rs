use clap::Parser;

use cpsf_core::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
