fn main() {
    std::process::exit(parkmarl::cli::main());
}
