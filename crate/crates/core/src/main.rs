fn main() {
    std::process::exit(tirewear_mpc::harness::cli::cli_main(std::env::args_os()));
}
