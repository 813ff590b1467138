fn main() {
    std::process::exit(mrplab_cli::dispatch(std::env::args_os()));
}
