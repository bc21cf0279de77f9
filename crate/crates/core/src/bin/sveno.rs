use clap::Parser;
use sveno::cli::{execute, report, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err((error, dir)) = execute(&cli) {
        std::process::exit(report(&error, dir.as_deref()));
    }
}
