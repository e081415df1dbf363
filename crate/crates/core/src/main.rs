fn main() -> std::process::ExitCode {
    majda_znd::cli::main_entry()
}
