fn main() {
    std::process::exit(smellprop_cli::run(std::env::args().collect()));
}
