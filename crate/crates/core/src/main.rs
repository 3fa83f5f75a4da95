fn main() {
    std::process::exit(driftrate::cli::main_with_args(std::env::args_os()));
}
