fn main() {
    abom_cli::main_with(abom_cli::run_hash)
}
