fn main() {
    std::process::exit(bosonic_ckp::cli::run(std::env::args_os()));
}
