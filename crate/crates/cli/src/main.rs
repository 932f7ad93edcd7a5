fn main() {
    std::process::exit(cyclobloch_cli::main_with(std::env::args_os()));
}
