fn main() {
    std::process::exit(mme::cli::run(std::env::args_os()));
}
