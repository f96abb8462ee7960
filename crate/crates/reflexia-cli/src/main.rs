//! `reflexia` — build, verify and reconstruct local reflexion spaces.
//!
//! Usage:
//! ```text
//! reflexia <analyze|verify|roundtrip|flows> --config <path> [--out <path>] [--seed <int>]
//! ```
//!
//! Exit codes: 0 every checked condition holds, 1 a checked condition
//! failed, 2 input or usage error. `REFLEXIA_THREADS` caps parallel
//! sampling (default 1; parallelism never changes report bytes).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

mod commands;
mod config;

struct CliArgs {
    command: String,
    config_path: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

const USAGE: &str = "usage: reflexia <analyze|verify|roundtrip|flows> --config <path> [--out <path>] [--seed <int>]";

fn parse_args(args: &[String]) -> Result<CliArgs, String> {
    let mut iter = args.iter();
    let command = iter.next().ok_or(USAGE)?.clone();
    if !matches!(
        command.as_str(),
        "analyze" | "verify" | "roundtrip" | "flows"
    ) {
        return Err(format!("unknown command '{command}'\n{USAGE}"));
    }
    let mut config_path = None;
    let mut out = None;
    let mut seed = None;
    while let Some(flag) = iter.next() {
        match flag.as_str() {
            "--config" => {
                let v = iter.next().ok_or("--config needs a value")?;
                config_path = Some(PathBuf::from(v));
            }
            "--out" => {
                let v = iter.next().ok_or("--out needs a value")?;
                out = Some(PathBuf::from(v));
            }
            "--seed" => {
                let v = iter.next().ok_or("--seed needs a value")?;
                seed = Some(v.parse::<u64>().map_err(|_| "--seed must be an integer")?);
            }
            other => return Err(format!("unknown flag '{other}'\n{USAGE}")),
        }
    }
    Ok(CliArgs {
        command,
        config_path: config_path.ok_or_else(|| format!("--config is required\n{USAGE}"))?,
        out,
        seed,
    })
}

fn run(args: CliArgs) -> Result<i32, String> {
    let (mut run_config, base) = config::read_config(&args.config_path)?;
    if let Some(seed) = args.seed {
        run_config.seed = seed;
    }
    let inputs = config::load_inputs(&run_config, &base)?;
    let (exit, report) = match args.command.as_str() {
        "analyze" => commands::cmd_analyze(&run_config, &inputs)?,
        "verify" => commands::cmd_verify(&run_config, &inputs)?,
        "roundtrip" => commands::cmd_roundtrip(&run_config, &inputs)?,
        "flows" => commands::cmd_flows(&run_config, &inputs)?,
        _ => unreachable!("validated in parse_args"),
    };

    let text = serde_json::to_string_pretty(&report).expect("reports are serializable") + "\n";
    let out_path = args
        .out
        .or_else(|| run_config.out.as_ref().map(|o| resolve_out(&base, o)));
    match out_path {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(exit)
}

fn resolve_out(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let parsed = match parse_args(&args) {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    match run(parsed) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
