fn main() {
    std::process::exit(prf::cli::main_with_args(std::env::args_os()));
}
