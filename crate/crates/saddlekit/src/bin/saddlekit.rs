fn main() {
    std::process::exit(saddlekit::cli::cli_dispatch(std::env::args()));
}
