fn main() {
    std::process::exit(raydrop::cli::run(std::env::args_os()));
}
