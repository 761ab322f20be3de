fn main() {
    std::process::exit(venuerec_cli::main_with(std::env::args_os()));
}
