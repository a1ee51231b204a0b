fn main() {
    std::process::exit(qudit::cli::run(std::env::args_os()));
}
