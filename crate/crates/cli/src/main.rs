fn main() {
    std::process::exit(vecraster_cli::run(std::env::args_os()));
}
