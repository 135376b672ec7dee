fn main() {
    std::process::exit(gcore::cli::main_with_args(std::env::args_os()));
}
