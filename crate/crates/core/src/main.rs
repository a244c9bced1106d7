fn main() {
    let code = sensordiff::cli::run(std::env::args_os());
    std::process::exit(code);
}
