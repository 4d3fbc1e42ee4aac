fn main() {
    std::process::exit(cvcluster::cli::main_with(std::env::args_os()));
}
