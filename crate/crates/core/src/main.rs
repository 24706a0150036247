use clap::Parser;

use chaining_lab::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
