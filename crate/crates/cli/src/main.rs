fn main() {
    std::process::exit(specrank_cli::run(std::env::args_os()));
}
