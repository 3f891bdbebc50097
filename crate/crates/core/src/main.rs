fn main() {
    std::process::exit(record_moments::cli::main_with_args(std::env::args_os()));
}
