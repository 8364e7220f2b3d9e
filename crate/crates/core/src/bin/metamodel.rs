fn main() -> std::process::ExitCode {
    metamodel::cli::main()
}
