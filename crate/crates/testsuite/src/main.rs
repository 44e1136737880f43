//! The CLI entry point, rebuilt here so the acceptance target can spawn it.

fn main() {
    std::process::exit(assetopt_cli::run(std::env::args_os()));
}
