fn main() {
    std::process::exit(dilates_cli::main_with(std::env::args_os()));
}
