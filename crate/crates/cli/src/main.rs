fn main() {
    std::process::exit(rbm_cli::main_with_args(std::env::args_os()));
}
