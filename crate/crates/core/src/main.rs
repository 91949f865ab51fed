fn main() {
    std::process::exit(hypvmc::cli::run(std::env::args_os()));
}
