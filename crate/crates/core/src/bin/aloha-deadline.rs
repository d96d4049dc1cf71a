fn main() {
    std::process::exit(aloha_deadline::cli::main_with_args(std::env::args_os()));
}
