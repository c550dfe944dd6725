use std::process::ExitCode;

fn main() -> ExitCode {
    qorpilot_cli::init_logging();
    let env = std::env::vars().collect();
    ExitCode::from(qorpilot_cli::main_with(std::env::args().collect(), env))
}
