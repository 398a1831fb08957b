use std::io::Write;

fn main() {
    let out = learnsel_cli::run(std::env::args_os());
    // a closed pipe is not worth a panic
    let _ = std::io::stdout().lock().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().lock().write_all(out.stderr.as_bytes());
    std::process::exit(out.code);
}
