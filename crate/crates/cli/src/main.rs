use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dsmooth::{default_catalog, run_file};

#[derive(Parser, Debug)]
#[command(name = "dsmooth", about = "Run delay-smoothing experiments from a TOML config")]
struct Args {
    /// Experiment config.
    #[arg(long, required_unless_present = "list")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Print the catalog and exit.
    #[arg(long)]
    list: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let catalog = default_catalog();
    if args.list {
        for (kind, name) in catalog.listing() {
            println!("{kind}\t{name}");
        }
        return ExitCode::SUCCESS;
    }
    if let Some(k) = args.threads {
        if k == 0 {
            eprintln!("validation error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("i/o error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let config = args.config.expect("clap enforces --config");
    match run_file(&config, &args.out, &catalog) {
        Ok(o) => {
            println!(
                "{}: {} ({})",
                config.display(),
                if o.pass { "PASS" } else { "FAIL" },
                o.files.join(", ")
            );
            ExitCode::from(o.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
