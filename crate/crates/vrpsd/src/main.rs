use clap::Parser;

fn main() {
    let cli = vrpsd::cli::Cli::parse();
    std::process::exit(vrpsd::cli::run(cli));
}
