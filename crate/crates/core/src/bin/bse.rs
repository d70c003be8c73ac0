fn main() {
    std::process::exit(bisent::cli::main_with_args(std::env::args_os()));
}
