fn main() {
    std::process::exit(paprika::harness::cli_main(std::env::args_os()));
}
