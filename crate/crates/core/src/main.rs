fn main() {
    std::process::exit(cultmarket::cli::cli_main(std::env::args_os()));
}
