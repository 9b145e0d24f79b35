fn main() {
    std::process::exit(burstdissect::cli::run(std::env::args_os()));
}
