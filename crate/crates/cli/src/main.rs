fn main() {
    std::process::exit(icegraph::run(std::env::args_os()));
}
