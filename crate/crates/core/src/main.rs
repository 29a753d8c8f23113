use std::process::ExitCode;

fn main() -> ExitCode {
    let r = infmeasure::cli::execute(std::env::args_os());
    print!("{}", r.stdout);
    eprint!("{}", r.stderr);
    ExitCode::from(r.code as u8)
}
