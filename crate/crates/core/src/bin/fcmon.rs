fn main() {
    std::process::exit(fcmon::cli::run_cli(std::env::args_os()));
}
