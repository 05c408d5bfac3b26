use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let status = gauge_reader::cli::run(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(status.code() as u8)
}
