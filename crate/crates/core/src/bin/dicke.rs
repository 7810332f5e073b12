fn main() -> std::process::ExitCode {
    dicke_core::cli::main()
}
