fn main() {
    env_logger::init();
    std::process::exit(adsub::cli::main_with_args(std::env::args_os()));
}
