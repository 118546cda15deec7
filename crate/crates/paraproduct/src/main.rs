fn main() {
    std::process::exit(paraproduct::cli::main());
}
