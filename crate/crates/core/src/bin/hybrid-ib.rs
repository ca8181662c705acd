fn main() {
    std::process::exit(hybrid_ib::cli::run_cli(std::env::args_os()));
}
