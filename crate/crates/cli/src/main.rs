//! `einsel --config run.json [--out PATH] [--format csv|json] [--seed N]`
//!
//! Exit codes: 0 success, 1 I/O failure, 2 config error, 3 a check failed
//! during the run (the artifact is still written).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use einsel::experiment::{run, ExperimentConfig, Format, EXPERIMENTS};
use einsel::Error;

#[derive(Debug, Parser)]
#[command(name = "einsel", version, about = "Decoherence and einselection experiments")]
struct Args {
    /// Experiment config (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Artifact path; overrides the config. Without either, the artifact goes to stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Artifact format; overrides the config.
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Random seed; overrides the config.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CHECK: u8 = 3;

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    match err {
        Error::Io(_) => ExitCode::from(EXIT_IO),
        Error::UnknownExperiment(_) => {
            eprintln!("known experiments: {}", EXPERIMENTS.join(", "));
            ExitCode::from(EXIT_CONFIG)
        }
        _ => ExitCode::from(EXIT_CONFIG),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut config = match ExperimentConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(seed) = args.seed {
        config = config.with_seed(seed);
    }
    if let Some(f) = &args.format {
        config = config.with_format(f.parse::<Format>().expect("clap restricts the value"));
    }
    if let Some(out) = args.out {
        config = config.with_output(out);
    }

    let artifact = match run(&config) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let written = match &config.output {
        Some(path) => artifact.write(path),
        None => artifact
            .render()
            .and_then(|s| std::io::stdout().write_all(s.as_bytes()).map_err(Error::from)),
    };
    if let Err(e) = written {
        return fail(&e);
    }
    eprintln!("{}", artifact.summary());
    if artifact.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK)
    }
}
