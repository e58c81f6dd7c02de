fn main() {
    std::process::exit(floqlin_cli::run(std::env::args_os()));
}
