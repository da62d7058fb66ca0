use clap::Parser;

fn main() {
    std::process::exit(mazo::cli::run(mazo::cli::Cli::parse()));
}
