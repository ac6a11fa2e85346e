use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = cachewire_cli::Args::parse();
    match cachewire_cli::run(&args) {
        Ok(output) => {
            println!("{}", output.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cachewire: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
