fn main() {
    std::process::exit(selftest::cli::run());
}
