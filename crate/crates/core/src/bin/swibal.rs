fn main() {
    std::process::exit(swibal::cli::main_with_args(std::env::args_os()));
}
