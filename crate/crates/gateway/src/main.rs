fn main() {
    std::process::exit(vax_gateway::cli::main());
}
