fn main() {
    std::process::exit(uepq::cli::main_with_args(std::env::args_os()));
}
