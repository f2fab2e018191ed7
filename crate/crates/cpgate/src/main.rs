fn main() {
    std::process::exit(cpgate::cli::run(std::env::args_os()));
}
