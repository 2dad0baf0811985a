fn main() {
    std::process::exit(csfbench::cli::main_with_args(std::env::args_os()));
}
