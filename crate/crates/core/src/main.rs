fn main() {
    std::process::exit(gaussmax::cli::run(std::env::args_os()));
}
