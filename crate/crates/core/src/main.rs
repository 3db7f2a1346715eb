fn main() {
    std::process::exit(tbger::cli::main_with_args(std::env::args_os()));
}
