use clap::Parser;

fn main() {
    std::process::exit(npi_cli::run(npi_cli::Cli::parse()));
}
