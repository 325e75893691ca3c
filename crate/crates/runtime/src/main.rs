fn main() {
    std::process::exit(intent_runtime::cli::run(std::env::args_os()));
}
