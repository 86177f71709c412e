fn main() {
    std::process::exit(hivesense::cli::main_with_args(std::env::args_os()));
}
