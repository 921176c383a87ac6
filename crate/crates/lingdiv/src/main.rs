fn main() {
    std::process::exit(lingdiv::cli::main_with_args(std::env::args_os()));
}
