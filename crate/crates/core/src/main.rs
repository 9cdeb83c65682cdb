use clap::Parser;

fn main() {
    let cli = cimxor::cli::Cli::parse();
    std::process::exit(cimxor::cli::run(cli));
}
