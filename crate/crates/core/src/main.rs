fn main() {
    std::process::exit(causalid::cli::main());
}
