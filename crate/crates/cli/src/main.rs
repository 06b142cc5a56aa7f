fn main() {
    std::process::exit(bisolve_cli::run_cli(std::env::args_os()));
}
