fn main() {
    std::process::exit(rfclust_cli::run(std::env::args_os()));
}
