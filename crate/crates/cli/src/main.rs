use clap::Parser;

fn main() {
    let cli = pipgd_cli::args::Cli::parse();
    std::process::exit(pipgd_cli::run(&cli));
}
