fn main() {
    std::process::exit(qasrl::cli::run(std::env::args_os()));
}
