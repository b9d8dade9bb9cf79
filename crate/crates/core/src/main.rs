fn main() {
    std::process::exit(continuized::harness::cli_main(std::env::args_os()));
}
