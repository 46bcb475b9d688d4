fn main() {
    std::process::exit(rankone::cli::main_with_args(std::env::args_os()));
}
