fn main() {
    std::process::exit(ermtree_experiments::cli::cli_main(std::env::args_os()));
}
