fn main() {
    std::process::exit(robust_elicit::cli::main_with(std::env::args_os()));
}
