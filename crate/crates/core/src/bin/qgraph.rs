fn main() {
    std::process::exit(qgraph_accretive::cli::run(std::env::args_os()));
}
