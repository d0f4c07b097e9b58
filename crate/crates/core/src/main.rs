fn main() {
    std::process::exit(ncg_twist::cli::run(std::env::args_os()));
}
