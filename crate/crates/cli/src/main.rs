fn main() {
    env_logger::init();
    std::process::exit(tase_cli::main_with_args(std::env::args_os()));
}
