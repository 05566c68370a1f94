fn main() {
    std::process::exit(mobsrv_cli::main_with_args(std::env::args_os()));
}
