fn main() {
    std::process::exit(eigenlab::config::cli_main());
}
