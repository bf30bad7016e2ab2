use clap::Parser;
use wsbench::cli::{run, Cli};

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("wsbench: {}", e.to_string().replace('\n', " "));
        std::process::exit(e.exit_code());
    }
}
