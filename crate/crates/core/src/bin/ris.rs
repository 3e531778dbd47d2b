fn main() {
    std::process::exit(ris_core::cli::run_from(std::env::args_os()));
}
