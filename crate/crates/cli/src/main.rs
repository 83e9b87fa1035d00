fn main() {
    std::process::exit(pathbelief_cli::main_with(std::env::args_os()));
}
