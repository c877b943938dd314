fn main() {
    std::process::exit(graphae::cli::run(std::env::args_os()));
}
