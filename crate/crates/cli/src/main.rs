fn main() {
    std::process::exit(roid_cli::run(std::env::args_os()));
}
