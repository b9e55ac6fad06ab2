use std::io::Write;
use std::panic;
use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<std::ffi::OsString> = std::env::args_os().collect();
    match panic::catch_unwind(|| rcmkit::cli::run(args)) {
        Ok(code) => ExitCode::from(code),
        Err(_) => {
            let _ = writeln!(std::io::stderr(), "error: internal invariant violated");
            ExitCode::from(2)
        }
    }
}
