fn main() {
    std::process::exit(sqlab::cli::main_exit_code());
}
