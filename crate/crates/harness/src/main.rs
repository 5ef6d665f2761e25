fn main() {
    std::process::exit(evocomm::cli_main(std::env::args_os()));
}
