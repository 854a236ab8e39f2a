use clap::{Parser, Subcommand};
use homtest_cli::{campaign, config, verify};
use homtest_core::evalmap::constants_report;
use homtest_core::oracle;
use homtest_core::{EvalMapCtx, RngStream};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "homtest", about = "Homomorphism-testing experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config (flat key=value file).
    Run {
        config: PathBuf,
        /// Worker threads for campaign rows.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Write the JSON report here (overrides the config's out= key).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the CSV matrix here (overrides the config's csv= key).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the brute-force oracle matrix.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Skip instances whose group order exceeds this.
        #[arg(long, default_value_t = 1000)]
        max_order: u128,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evaluation-map constants (gamma/rho/trho/eta) for a space.
    Constants {
        #[arg(long)]
        space: String,
        /// Arity range a..b (inclusive).
        #[arg(long, default_value = "1..4")]
        k_range: String,
    },
    /// List sizes at an agreement-threshold grid for seeded random functions.
    Listdecode {
        #[arg(long)]
        space: String,
        /// Comma-separated thresholds, e.g. 1/2,1/3,0.25.
        #[arg(long)]
        eps_grid: String,
        #[arg(long, default_value_t = 20)]
        funcs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

const EXIT_ASSERTION: u8 = 2;
const EXIT_CONFIG: u8 = 3;

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn write_or_die(path: &PathBuf, bytes: &[u8]) -> Result<(), ExitCode> {
    std::fs::write(path, bytes).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn parse_k_range(s: &str) -> Option<(u32, u32)> {
    let (a, b) = s.split_once("..")?;
    let a = a.parse().ok()?;
    let b = b.parse().ok()?;
    if a == 0 || b < a {
        None
    } else {
        Some((a, b))
    }
}

fn run(cli: Cli) -> Result<ExitCode, ExitCode> {
    match cli.command {
        Command::Run { config, workers, out, csv } => {
            let text =
                std::fs::read_to_string(&config).map_err(|e| config_error(format!("{e}")))?;
            let cfg = config::parse_config(&text).map_err(config_error)?;
            let report = campaign::run_campaign(&cfg, workers).map_err(config_error)?;
            print!("{}", report.to_text());
            let json_path = out.or_else(|| cfg.out_json.clone().map(PathBuf::from));
            if let Some(p) = json_path {
                write_or_die(&p, &report.to_json_bytes())?;
            }
            let csv_path = csv.or_else(|| cfg.out_csv.clone().map(PathBuf::from));
            if let Some(p) = csv_path {
                write_or_die(&p, report.to_csv().as_bytes())?;
            }
            if report.failures.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                for f in &report.failures {
                    eprintln!("counterexample: {f}");
                }
                Ok(ExitCode::from(EXIT_ASSERTION))
            }
        }
        Command::Verify { suite, max_order, seed, workers, csv, json } => {
            if suite != "all" {
                return Err(config_error(format!("unknown suite {suite:?} (only 'all')")));
            }
            let cap = config::cap_from_env();
            let rows = verify::run_verify(max_order, seed, cap, workers).map_err(config_error)?;
            for r in &rows {
                println!("{:<24} {:<28} {:<5} {}", r.check, r.instance, r.status, r.detail);
            }
            if let Some(p) = csv {
                write_or_die(&p, verify::verify_csv(&rows).as_bytes())?;
            }
            if let Some(p) = json {
                let mut s = serde_json::to_string_pretty(&verify::verify_json(&rows)).unwrap();
                s.push('\n');
                write_or_die(&p, s.as_bytes())?;
            }
            if rows.iter().any(|r| r.status == "fail") {
                Ok(ExitCode::from(EXIT_ASSERTION))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Constants { space, k_range } => {
            let space = config::parse_space(&space).map_err(config_error)?;
            let (a, b) = parse_k_range(&k_range)
                .ok_or_else(|| config_error(format!("bad k range {k_range:?}")))?;
            let cap = config::cap_from_env();
            for k in a..=b {
                let rep = constants_report(&space, k, cap).map_err(config_error)?;
                println!("{}", serde_json::to_string(&rep).unwrap());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Listdecode { space, eps_grid, funcs, seed } => {
            let space = config::parse_space(&space).map_err(config_error)?;
            let eps: Vec<_> = eps_grid
                .split(',')
                .map(|e| {
                    config::parse_rational(e)
                        .ok_or_else(|| config_error(format!("bad threshold {e:?}")))
                })
                .collect::<Result<_, _>>()?;
            let cap = config::cap_from_env();
            let ctx = EvalMapCtx::new(space, 1, cap).map_err(config_error)?;
            let mut violations = 0usize;
            for i in 0..funcs {
                let mut rng = RngStream::substream(seed, i as u64);
                let f = oracle::FunctionGenerator::UniformRandom
                    .generate(&ctx, &mut rng)
                    .map_err(config_error)?;
                for e in &eps {
                    let rep = oracle::list_decode(&ctx, &f, e).map_err(config_error)?;
                    println!(
                        "f={i} eps={}/{} size={} bound={} {}",
                        e.numer(),
                        e.denom(),
                        rep.list_size,
                        rep.bound,
                        if rep.satisfied { "pass" } else { "FAIL" },
                    );
                    if !rep.satisfied {
                        violations += 1;
                    }
                }
            }
            if violations == 0 {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(EXIT_ASSERTION))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) | Err(code) => code,
    }
}
