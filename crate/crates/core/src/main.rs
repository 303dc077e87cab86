fn main() {
    std::process::exit(ferrolayer::cli::main_with(std::env::args_os()));
}
