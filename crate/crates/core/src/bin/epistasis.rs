fn main() {
    std::process::exit(epistasis::cli_io::main_with_args(std::env::args_os()));
}
