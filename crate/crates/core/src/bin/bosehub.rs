use clap::Parser;

fn main() {
    let cli = bosehub::cli::Cli::parse();
    std::process::exit(bosehub::cli::run_cli(cli));
}
