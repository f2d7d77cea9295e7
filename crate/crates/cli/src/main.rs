fn main() {
    std::process::exit(fbm_levy_cli::run(std::env::args()));
}
