fn main() {
    std::process::exit(sparse_olr::cli::run(std::env::args_os()));
}
