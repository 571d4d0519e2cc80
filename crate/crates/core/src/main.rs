fn main() {
    std::process::exit(itava::frontend::cli::run(std::env::args_os()));
}
