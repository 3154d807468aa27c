fn main() {
    std::process::exit(vminmax::cli::run(std::env::args_os()));
}
