fn main() {
    std::process::exit(cavity_bjj::cli::main_with_args(std::env::args_os()));
}
