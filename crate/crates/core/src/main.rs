fn main() {
    std::process::exit(cr_ofdma::cli::run(std::env::args_os()));
}
