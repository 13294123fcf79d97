use clap::Parser;

fn main() {
    let cli = algmech::cli::Cli::parse();
    std::process::exit(algmech::cli::run(cli));
}
