use clap::Parser;

use rdrsa::cli::{execute, exit_code, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(error) = execute(&cli) {
        eprintln!("error: {error}");
        std::process::exit(exit_code(&error));
    }
}
