use std::io;

fn main() {
    let stdin = io::stdin();
    let mut input = stdin.lock();
    let mut out = io::stdout().lock();
    let code = reluforge::cli::run(std::env::args_os(), &mut input, &mut out);
    std::process::exit(code);
}
