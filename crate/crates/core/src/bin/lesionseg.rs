fn main() {
    std::process::exit(lesionseg::cli::run(std::env::args_os()));
}
