fn main() {
    std::process::exit(horolab_cli::run(std::env::args()));
}
