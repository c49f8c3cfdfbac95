use clap::Parser;

fn main() {
    let cli = qbm_cli::Cli::parse();
    std::process::exit(qbm_cli::main_with(&cli));
}
