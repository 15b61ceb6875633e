use std::io::Write;
use std::process::ExitCode;

use gradsense_cli::{run, thread_cap_from_env, EXIT_USAGE};

fn main() -> ExitCode {
    match thread_cap_from_env() {
        Ok(Some(n)) => {
            // Fails only if a pool already exists, which cannot happen this early.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(None) => {}
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    }
    let outcome = run(std::env::args_os());
    // Broken pipes are not worth a panic; the exit code still reports the result.
    let _ = std::io::stdout().write_all(&outcome.stdout);
    let _ = std::io::stderr().write_all(&outcome.stderr);
    ExitCode::from(outcome.exit_code as u8)
}
