fn main() {
    std::process::exit(shilnikov_forge::cli::dispatch(std::env::args_os()));
}
