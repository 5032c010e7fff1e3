fn main() {
    std::process::exit(gvnn_kit::cli::run(std::env::args_os()));
}
