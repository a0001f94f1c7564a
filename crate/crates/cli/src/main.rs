fn main() {
    std::process::exit(qnp_cli::run(std::env::args_os()));
}
