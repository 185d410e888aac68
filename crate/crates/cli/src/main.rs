fn main() {
    std::process::exit(lsr_cli::run(std::env::args_os()));
}
