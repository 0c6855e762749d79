fn main() {
    std::process::exit(ariadne::cli::run(std::env::args_os()));
}
