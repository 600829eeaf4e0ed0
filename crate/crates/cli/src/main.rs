fn main() {
    std::process::exit(hdnids_cli::run(std::env::args_os()));
}
