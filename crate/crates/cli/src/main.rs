fn main() {
    std::process::exit(qsp_harness::cli::run(std::env::args_os()));
}
