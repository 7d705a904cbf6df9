fn main() {
    std::process::exit(fracflow::cli::main_with_args(std::env::args_os()));
}
