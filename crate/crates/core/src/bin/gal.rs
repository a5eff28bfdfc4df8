use std::process::ExitCode;

fn main() -> ExitCode {
    gal::cli::main()
}
