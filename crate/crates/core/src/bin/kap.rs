fn main() {
    std::process::exit(kap::cli::main());
}
