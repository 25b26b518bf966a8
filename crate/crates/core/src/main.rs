fn main() {
    std::process::exit(squid_grover::cli::main_with_args(std::env::args_os()));
}
