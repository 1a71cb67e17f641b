fn main() {
    std::process::exit(exempt_audit::cli::main_with(std::env::args_os()));
}
