use std::io::Write;
use std::process::ExitCode;

use relimp::cli::{parse_args, run, THREADS_ENV};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();

    let cfg = match parse_args(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(e) => e.exit(),
    };

    if let Ok(text) = std::env::var(THREADS_ENV) {
        match text.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    log::warn!("could not configure {n} threads: {e}");
                }
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got `{text}`");
                return ExitCode::from(2);
            }
        }
    }

    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run(&cfg, &mut stdout.lock(), &mut stderr.lock());
    let _ = std::io::stdout().flush();
    ExitCode::from(code as u8)
}
