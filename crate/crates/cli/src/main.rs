fn main() {
    std::process::exit(coherelab_cli::run());
}
