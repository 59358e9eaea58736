fn main() {
    std::process::exit(coexist_sim::cli::main_with_args(std::env::args_os()));
}
