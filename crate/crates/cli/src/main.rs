fn main() {
    std::process::exit(maxleak_cli::run(std::env::args_os()));
}
