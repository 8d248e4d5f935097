fn main() {
    std::process::exit(piotrowski::cli::run(std::env::args_os()));
}
