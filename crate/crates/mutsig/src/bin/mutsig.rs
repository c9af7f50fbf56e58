use clap::Parser;

fn main() {
    let cli = mutsig::cli::Cli::parse();
    if let Err(e) = mutsig::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
