fn main() {
    std::process::exit(imbdepth_cli::run(std::env::args_os()));
}
