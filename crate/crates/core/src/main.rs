use std::process::ExitCode;

fn main() -> ExitCode {
    if let Some(n) = std::env::var("OPENDECAY_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    ExitCode::from(opendecay::harness::cli::run_cli(std::env::args_os()) as u8)
}
