fn main() {
    std::process::exit(clusterlm::cli::run(std::env::args_os()));
}
