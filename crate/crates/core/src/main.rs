fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(sqha::cli::run_command(&args));
}
