fn main() {
    std::process::exit(bucb::main_with_args(std::env::args_os()));
}
