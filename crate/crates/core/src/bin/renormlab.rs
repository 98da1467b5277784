fn main() {
    std::process::exit(renormlab::cli::main_with_args(std::env::args_os()));
}
