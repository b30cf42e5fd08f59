fn main() {
    std::process::exit(dpcolor_cli::run(std::env::args_os()));
}
