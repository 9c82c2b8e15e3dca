fn main() {
    std::process::exit(thullen::cli::main_with_args(std::env::args_os()));
}
