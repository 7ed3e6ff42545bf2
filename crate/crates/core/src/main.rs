fn main() {
    std::process::exit(canontrace::cli::main_entry());
}
