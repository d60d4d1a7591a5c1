fn main() {
    std::process::exit(commsim::cli::run_cli(std::env::args_os()));
}
