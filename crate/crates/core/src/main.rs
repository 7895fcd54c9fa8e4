fn main() {
    std::process::exit(blockspmv::cli::run(std::env::args_os()));
}
