fn main() {
    std::process::exit(nqc::cli::main_with_args(std::env::args_os()));
}
