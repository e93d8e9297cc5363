mod cli;

use clap::Parser;

fn main() {
    let args = match cli::expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    };
    let parsed = cli::Cli::parse_from(args);
    std::process::exit(cli::dispatch(parsed));
}
