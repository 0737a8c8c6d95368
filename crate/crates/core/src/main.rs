fn main() {
    std::process::exit(sivtool::cli::run(std::env::args_os()));
}
