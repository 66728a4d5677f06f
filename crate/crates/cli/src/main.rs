fn main() {
    std::process::exit(qauction_cli::dispatch(std::env::args_os()));
}
