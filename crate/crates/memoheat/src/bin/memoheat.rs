fn main() {
    std::process::exit(memoheat::cli::run(std::env::args_os()));
}
