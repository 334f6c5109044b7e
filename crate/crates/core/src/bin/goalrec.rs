fn main() {
    std::process::exit(goalrec::cli::run(std::env::args_os()));
}
