fn main() {
    std::process::exit(focalframes::cli::run(std::env::args_os()));
}
