fn main() {
    std::process::exit(kflock::cli::run(std::env::args_os()));
}
