fn main() {
    std::process::exit(aircargo::cli::run(std::env::args_os()));
}
