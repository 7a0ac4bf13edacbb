fn main() {
    std::process::exit(somkit::cli::run(std::env::args_os()));
}
