fn main() {
    std::process::exit(annuli_cli::run(std::env::args_os()));
}
