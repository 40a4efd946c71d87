fn main() {
    std::process::exit(oamtilt_cli::run::main_with_args(std::env::args_os()));
}
