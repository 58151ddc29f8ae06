fn main() {
    std::process::exit(raman_echo::cli::run_cli());
}
