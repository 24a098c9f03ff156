fn main() {
    std::process::exit(critblow_cli::main_with_args(std::env::args_os()));
}
