fn main() {
    std::process::exit(rem::cli::dispatch(std::env::args_os()));
}
