fn main() {
    std::process::exit(sumnorm::cli::run(std::env::args_os()));
}
