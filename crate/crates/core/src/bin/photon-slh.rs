use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(photon_slh::cli::run(std::env::args_os()))
}
