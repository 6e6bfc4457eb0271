fn main() {
    let code = hdelaunay::cli::run(std::env::args_os());
    std::process::exit(code);
}
