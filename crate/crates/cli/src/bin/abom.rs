fn main() {
    abom_cli::main_with(|args, out, err| abom_cli::run_abom(args, out, err))
}
