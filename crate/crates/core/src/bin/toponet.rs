use clap::Parser;

fn main() {
    let cli = toponet::cli::Cli::parse();
    if let Err(e) = toponet::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(toponet::cli::exit_code(&e));
    }
}
