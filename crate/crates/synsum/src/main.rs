fn main() {
    std::process::exit(synsum::cli::main(std::env::args_os()));
}
