use clap::Parser;

fn main() {
    let cli = webspam::cli::Cli::parse();
    if let Err(e) = webspam::cli::run(cli, &mut std::io::stdout().lock()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
