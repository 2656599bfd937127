fn main() {
    if let Err(e) = tcsm::cli::configure_threads() {
        eprintln!("{e}");
        std::process::exit(e.code());
    }
    std::process::exit(tcsm::cli::run(std::env::args().collect()));
}
