fn main() -> std::process::ExitCode {
    ncdl::cli::main_entry()
}
