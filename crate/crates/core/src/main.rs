fn main() {
    std::process::exit(hyperdenoise::cli::run(std::env::args_os()));
}
