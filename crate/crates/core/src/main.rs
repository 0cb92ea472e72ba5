use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use o2lyap::harness::checks::run_checks;
use o2lyap::harness::config::{ScenarioConfig, ScenarioKind, ALL_SCENARIOS, SWEEP_PARAMS};
use o2lyap::harness::output::{output_root, run_directory, write_error_manifest, write_outputs, OUTPUT_ROOT_ENV};
use o2lyap::harness::{run_scenario, sweep, ScenarioOutcome};

#[derive(Parser)]
#[command(name = "o2lyap", version, about = "Lyapunov functionals for scalar reaction-diffusion equations")]
struct Cli {
    /// Output root (overrides the environment variable).
    #[arg(long, global = true)]
    output_root: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a TOML config.
    Run { config: PathBuf },
    /// Run a config once per value of one parameter, in parallel.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// Run the built-in invariant suite.
    Check,
    /// List scenarios, or print a preset config for one.
    ListScenarios {
        /// Print the preset config of this scenario.
        #[arg(long)]
        preset: Option<String>,
    },
}

const EXIT_OTHER: u8 = 1;

fn report(outcome: &ScenarioOutcome, dir: &std::path::Path) {
    let s = &outcome.summary;
    println!(
        "{}: {} saves, dt {:.3e}, final |u_t| {:.3e} -> {}",
        s.scenario,
        s.saves,
        s.dt,
        s.final_ut_inf,
        dir.display()
    );
    if let Some(m) = s.v_monotone {
        println!("  V monotone: {m} (worst relative increase {:.3e})", s.v_worst_increase.unwrap_or(f64::NAN));
    }
    if let Some(r) = s.max_normalized_residual {
        println!("  decay identity residual / max(1,|dV/dt|): {r:.3e}");
    }
    if let Some(r) = &s.rotating {
        println!("  shift {:.6} match {:.3e} speed {:.6}", r.theta, r.match_error, r.speed);
    }
    if let Some(p) = &s.planar {
        println!(
            "  period {:.6} return {:.3e} projection {:.3e} off-span {:.3e}",
            p.period, p.return_error, p.projection_error, p.off_span_ratio
        );
    }
    if let Some(f) = &outcome.failure {
        eprintln!("  {}: {}", f.kind, f.message);
    }
}

fn run_one(cfg: &ScenarioConfig, root: &std::path::Path) -> u8 {
    let dir = match run_directory(cfg, root) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_OTHER;
        }
    };
    match run_scenario(cfg) {
        Ok(outcome) => {
            if let Err(e) = write_outputs(&outcome, &dir) {
                eprintln!("error writing {}: {e}", dir.display());
                return EXIT_OTHER;
            }
            report(&outcome, &dir);
            outcome.exit_code() as u8
        }
        Err(e) => {
            eprintln!("error: {e}");
            let _ = write_error_manifest(cfg, &e, &dir);
            if e.is_construction_failure() {
                3
            } else {
                EXIT_OTHER
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let root = cli.output_root.clone().unwrap_or_else(output_root);
    let load = |path: &PathBuf| {
        ScenarioConfig::load(path).map_err(|e| {
            eprintln!("error: {}: {e}", path.display());
            ExitCode::from(EXIT_OTHER)
        })
    };
    match cli.command {
        Command::Run { config } => match load(&config) {
            Ok(cfg) => ExitCode::from(run_one(&cfg, &root)),
            Err(code) => code,
        },
        Command::Sweep { config, param, values } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if !SWEEP_PARAMS.contains(&param.as_str()) {
                eprintln!("error: unknown parameter '{param}'; one of {}", SWEEP_PARAMS.join(", "));
                return ExitCode::from(EXIT_OTHER);
            }
            let mut worst = 0u8;
            for (v, result) in sweep(&cfg, &param, &values) {
                let code = match result {
                    Ok(outcome) => match run_directory(&outcome.config, &root).and_then(|d| write_outputs(&outcome, &d).map(|_| d)) {
                        Ok(dir) => {
                            report(&outcome, &dir);
                            outcome.exit_code() as u8
                        }
                        Err(e) => {
                            eprintln!("{param}={v}: error writing output: {e}");
                            EXIT_OTHER
                        }
                    },
                    Err(e) => {
                        eprintln!("{param}={v}: {e}");
                        if e.is_construction_failure() {
                            3
                        } else {
                            EXIT_OTHER
                        }
                    }
                };
                worst = worst.max(code);
            }
            ExitCode::from(worst)
        }
        Command::Check => {
            let results = run_checks();
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            if results.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_OTHER)
            }
        }
        Command::ListScenarios { preset } => {
            if let Some(name) = preset {
                match name.parse::<ScenarioKind>().and_then(|k| ScenarioConfig::preset(k).emit()) {
                    Ok(text) => {
                        print!("{text}");
                        ExitCode::SUCCESS
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        ExitCode::from(EXIT_OTHER)
                    }
                }
            } else {
                for k in ALL_SCENARIOS {
                    println!("{:<18} {}", k.name(), k.description());
                }
                println!("\noutput root: ${OUTPUT_ROOT_ENV} (default {})", output_root().display());
                ExitCode::SUCCESS
            }
        }
    }
}
