use clap::Parser;
use nesopt_core::cli::{run, NesoptCli};

fn main() {
    let cli = NesoptCli::parse();
    if cli.threads > 0 {
        // Global pool; library code inherits it for all parallel sections.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("warning: could not configure {} threads: {e}", cli.threads);
        }
    }
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
