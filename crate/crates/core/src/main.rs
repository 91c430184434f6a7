fn main() {
    std::process::exit(nlbd::cli::main());
}
