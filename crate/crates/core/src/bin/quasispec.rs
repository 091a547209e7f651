fn main() {
    std::process::exit(quasispec::cli::main_with_args(std::env::args_os()));
}
