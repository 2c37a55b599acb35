fn main() {
    std::process::exit(angval::cli::run(std::env::args_os()));
}
