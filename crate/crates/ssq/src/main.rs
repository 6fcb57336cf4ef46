use clap::Parser;

fn main() {
    let cli = ssq::cli::Cli::parse();
    let code = ssq::cli::run(
        cli,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(code);
}
