fn main() {
    std::process::exit(tmkit::cli::run())
}
