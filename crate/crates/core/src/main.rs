use clap::Parser;

fn main() {
    let cli = hcops::cli::Cli::parse();
    std::process::exit(hcops::cli::main_with(cli));
}
