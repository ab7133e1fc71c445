fn main() {
    std::process::exit(softreach::cli::main_with_args(std::env::args_os()));
}
