fn main() {
    std::process::exit(squid::bench::main_with_args(std::env::args_os()));
}
