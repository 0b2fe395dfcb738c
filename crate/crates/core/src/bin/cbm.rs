use clap::Parser;

fn main() {
    let cli = cbm::cli::Cli::parse();
    if let Err(e) = cbm::cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
