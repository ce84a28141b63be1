fn main() {
    std::process::exit(ceflux::cli::run(std::env::args_os()));
}
