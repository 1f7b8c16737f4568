use clap::Parser;

use crn_phase::cli::{error_kind, run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error[{}]: {e}", error_kind(&e));
        std::process::exit(1);
    }
}
