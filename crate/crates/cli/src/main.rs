fn main() {
    std::process::exit(spurious_cli::run(std::env::args_os()));
}
