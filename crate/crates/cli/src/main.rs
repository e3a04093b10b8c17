fn main() {
    std::process::exit(mwekit_cli::run(std::env::args_os()));
}
