fn main() {
    std::process::exit(spermmorph::cli::run(std::env::args_os()));
}
