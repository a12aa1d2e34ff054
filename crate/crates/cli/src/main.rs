use std::process::ExitCode;

fn main() -> ExitCode {
    if let Some(n) = std::env::var("KINWAVE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // ignore failure: the pool may already be initialized
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let code = kinwave_cli::main_with_args(std::env::args_os());
    ExitCode::from(code as u8)
}
