fn main() {
    std::process::exit(scatterlab_cli::run(std::env::args_os()));
}
