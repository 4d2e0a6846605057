use clap::Parser;
use epo_ecpe::cli::{exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error[{}]: {}", e.class(), e.to_string().replace('\n', " "));
        std::process::exit(exit_code(&e));
    }
}
