fn main() {
    std::process::exit(mbgdt::cli::main());
}
