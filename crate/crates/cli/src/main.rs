fn main() {
    std::process::exit(assetopt_cli::run(std::env::args_os()));
}
