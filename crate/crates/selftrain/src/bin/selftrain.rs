fn main() {
    std::process::exit(selftrain::harness::cli::run(std::env::args_os()));
}
