use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dsf::config::{flag_settings, parse_file, ExperimentConfig, Origin, KEYS};
use dsf::manifest::CRITERIA;
use dsf::{ConfigError, RunError};

#[derive(Parser)]
#[command(name = "dsf", version, about = "Directed spanning forest experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment: `run [experiment] [--config file] [--key value ...]`.
    ///
    /// The config file is a flat `key = value` list; flags override it.
    Run {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "ARGS")]
        args: Vec<String>,
    },
    /// List the command behind each acceptance criterion.
    Criteria,
    /// List the accepted configuration keys.
    Keys,
}

fn load(args: &[String]) -> Result<ExperimentConfig, RunError> {
    let (experiment, mut rest) = match args.first() {
        Some(a) if !a.starts_with("--") => (Some(a.clone()), args[1..].to_vec()),
        _ => (None, args.to_vec()),
    };
    let mut all = Vec::new();
    if let Some(i) = rest.iter().position(|a| a == "--config" || a.starts_with("--config=")) {
        let path = match rest[i].strip_prefix("--config=") {
            Some(p) => {
                let p = PathBuf::from(p);
                rest.remove(i);
                p
            }
            None => {
                if i + 1 >= rest.len() {
                    return Err(ConfigError::Other("--config needs a value".into()).into());
                }
                let p = PathBuf::from(rest.remove(i + 1));
                rest.remove(i);
                p
            }
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| ConfigError::Other(format!("{}: {e}", path.display())))?;
        all.extend(parse_file(&text).map_err(|e| ConfigError::Other(format!("{}: {e}", path.display())))?);
    }
    if let Some(e) = experiment {
        all.push(("experiment".to_string(), e, Origin::Flag));
    }
    all.extend(flag_settings(&rest)?);
    Ok(ExperimentConfig::from_settings(&all)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Criteria => {
            for (n, name, cmd) in CRITERIA {
                println!("{n:>2}  {name:<32} {cmd}");
            }
            ExitCode::SUCCESS
        }
        Command::Keys => {
            for k in KEYS {
                println!("{k}");
            }
            ExitCode::SUCCESS
        }
        Command::Run { args } => {
            let result = load(&args).and_then(|cfg| {
                let report = dsf::run(&cfg)?;
                Ok((cfg, report))
            });
            match result {
                Ok((cfg, report)) => {
                    for c in &report.checks {
                        println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                    }
                    println!("outputs in {}", cfg.out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("dsf: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
