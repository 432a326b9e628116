use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = benchforge::cli::Cli::parse();
    if let Err(e) = benchforge::cli::run(&cli) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
