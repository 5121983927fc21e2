use clap::Parser;

fn main() {
    let cli = palmgrid::cli::Cli::parse();
    std::process::exit(palmgrid::cli::run(cli));
}
