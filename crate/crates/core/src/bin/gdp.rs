fn main() {
    std::process::exit(gdp_core::cli::run(std::env::args_os()));
}
