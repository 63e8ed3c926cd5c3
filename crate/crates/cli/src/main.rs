use clap::Parser;

fn main() {
    std::process::exit(kerrcav_cli::main_with(kerrcav_cli::Cli::parse()));
}
