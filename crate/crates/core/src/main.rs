fn main() {
    std::process::exit(crystalline::cli::run(std::env::args_os()));
}
