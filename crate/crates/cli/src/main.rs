fn main() {
    std::process::exit(a11y_cli::run_cli(std::env::args_os()));
}
