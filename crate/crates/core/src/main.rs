fn main() {
    std::process::exit(bdwalk::cli::run(std::env::args()));
}
