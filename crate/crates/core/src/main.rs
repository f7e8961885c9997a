use std::process::ExitCode;

use clap::Parser;
use obddlab::harness::{run, write_atomic, ExperimentConfig, Format};

fn init_threads() {
    if let Some(n) = std::env::var("OBDDLAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        // A second init only fails if a pool already exists; nothing to do then.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    init_threads();
    let config = match ExperimentConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let config = match config.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let format = config.format.unwrap_or(Format::Csv);
    let body = match report.render(format) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    // export writes the program to --out; the report goes to stdout
    let report_path = config.out.as_ref().filter(|_| config.cmd.as_deref() != Some("export"));
    match report_path {
        Some(path) => {
            if let Err(e) = write_atomic(path, body.as_bytes()) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
        None => print!("{body}"),
    }
    eprint!("{}", report.summary());
    ExitCode::from(report.exit_code() as u8)
}
