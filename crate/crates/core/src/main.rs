fn main() {
    std::process::exit(keplerwave::cli::main_with_args(std::env::args_os()));
}
