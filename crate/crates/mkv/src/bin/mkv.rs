use std::path::PathBuf;
use std::process::ExitCode;

use mkv::config::ExperimentConfig;
use mkv::runner::{run, RunOptions, EXIT_ERROR};

const USAGE: &str = "usage: mkv <check|fp-solve|particles|besov|kernels|compare> \
--config <path> [--out <dir>] [--strict] [--force] [--seed <n>]";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        eprintln!("{USAGE}");
        return ExitCode::from(EXIT_ERROR as u8);
    }
    let subcommand = args[0].clone();
    let mut config_path: Option<PathBuf> = None;
    let mut opts = RunOptions::default();
    let mut i = 1;
    while i < args.len() {
        match args[i].as_str() {
            "--config" => {
                i += 1;
                match args.get(i) {
                    Some(p) => config_path = Some(PathBuf::from(p)),
                    None => return usage_error("--config needs a path"),
                }
            }
            "--out" => {
                i += 1;
                match args.get(i) {
                    Some(p) => opts.out_dir = Some(PathBuf::from(p)),
                    None => return usage_error("--out needs a directory"),
                }
            }
            "--strict" => opts.strict = true,
            "--force" => opts.force = true,
            "--seed" => {
                i += 1;
                match args.get(i).and_then(|s| s.parse::<u64>().ok()) {
                    Some(n) => opts.seed = Some(n),
                    None => return usage_error("--seed needs a nonnegative integer"),
                }
            }
            other => return usage_error(&format!("unknown option `{other}`")),
        }
        i += 1;
    }
    let Some(path) = config_path else {
        return usage_error("missing --config");
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: reading {}: {e}", path.display());
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    let cfg = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    let (code, out) = run(&subcommand, &cfg, &opts);
    print!("{out}");
    ExitCode::from(code as u8)
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}\n{USAGE}");
    ExitCode::from(EXIT_ERROR as u8)
}
