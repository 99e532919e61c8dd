fn main() {
    std::process::exit(smartq::cli::run(std::env::args_os()));
}
