use std::process::ExitCode;

use transgress_cli::{configure_threads, run, EXIT_CONFIG, THREADS_VAR};

fn main() -> ExitCode {
    let mut stderr = std::io::stderr();
    if let Err(msg) = configure_threads(std::env::var(THREADS_VAR).ok().as_deref()) {
        eprintln!("configuration error: {msg}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    let code = run(std::env::args_os(), &mut std::io::stdout(), &mut stderr);
    ExitCode::from(code as u8)
}
