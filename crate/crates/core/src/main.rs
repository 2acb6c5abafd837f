fn main() {
    std::process::exit(basis_core::cli::main_with_args(std::env::args_os()));
}
