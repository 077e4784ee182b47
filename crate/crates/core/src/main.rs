fn main() {
    std::process::exit(qis::cli::main());
}
