fn main() {
    std::process::exit(g2red::cli::run());
}
