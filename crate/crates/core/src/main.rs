fn main() {
    std::process::exit(ipjdsvd::cli::run(std::env::args_os()));
}
