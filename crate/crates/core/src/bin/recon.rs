fn main() -> std::process::ExitCode {
    recon_detect::cli::main()
}
