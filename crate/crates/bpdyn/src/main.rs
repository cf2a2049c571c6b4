fn main() {
    std::process::exit(bpdyn::cli::main(std::env::args_os()));
}
