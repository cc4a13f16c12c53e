use clap::Parser;

fn main() {
    std::process::exit(logschro::cli::main_with(logschro::cli::Cli::parse()));
}
