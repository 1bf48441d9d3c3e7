fn main() {
    std::process::exit(tangent_tower::cli::run());
}
