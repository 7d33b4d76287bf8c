fn main() {
    std::process::exit(gridbt::cli::run());
}
