use clap::Parser;

fn main() {
    let cli = kpump_cli::Cli::parse();
    let code = match kpump_cli::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}
