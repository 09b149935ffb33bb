//! Thin wrapper around the library CLI.

fn main() {
    std::process::exit(blockfade::cli::dispatch(std::env::args_os()));
}
