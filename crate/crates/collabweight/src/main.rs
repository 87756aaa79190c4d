use clap::Parser;
use collabweight::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
