fn main() {
    std::process::exit(iqpgraph_cli::run(std::env::args_os()));
}
