use clap::Parser;

fn main() {
    let cli = hodge_couple::cli::Cli::parse();
    std::process::exit(hodge_couple::cli::main_with(cli));
}
