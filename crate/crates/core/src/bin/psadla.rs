fn main() {
    std::process::exit(psadla::cli::main_with_args(std::env::args_os()));
}
