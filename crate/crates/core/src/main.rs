fn main() { std::process::exit(footcal::cli::run()); }
