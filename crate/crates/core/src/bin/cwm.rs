fn main() {
    std::process::exit(cwm::cli::run(std::env::args_os()));
}
