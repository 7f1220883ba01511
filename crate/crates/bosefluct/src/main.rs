fn main() {
    std::process::exit(bosefluct::cli::run(std::env::args_os()));
}
