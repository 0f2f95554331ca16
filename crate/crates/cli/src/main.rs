//! `strmom`: run, sweep and generate. Exit codes are part of the contract:
//! 0 success, 2 invalid configuration, 3 data problems, 4 numeric failure,
//! each with a single diagnostic line on stderr.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use strmom_core::engine;
use strmom_core::error::Error;
use strmom_core::market_data::{generate_synthetic, SyntheticParams, TickStream};
use strmom_core::report::{self, SweepRow};
use strmom_core::string::RegularFunction;

use config::FileConfig;

#[derive(Parser)]
#[command(
    name = "strmom",
    version,
    about = "Deterministic tick-data backtester for string-momentum models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one backtest and write the report bundle.
    Run {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output directory in the config file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat one config across an axis and tabulate the final NAVs.
    Sweep {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Axis to vary: l_s, Q, func, spread or n_s.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values, e.g. 800,900,1000,1100.
        #[arg(long)]
        values: String,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output directory in the config file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic tick CSV.
    Gen {
        /// random_walk | random_walk_drift | sinusoid
        #[arg(long)]
        model: String,
        /// Number of ticks.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file path.
        #[arg(long)]
        out: PathBuf,
        /// Starting mid price.
        #[arg(long)]
        start: Option<f64>,
        /// Per-tick standard deviation of the walk increment.
        #[arg(long)]
        volatility: Option<f64>,
        /// Per-tick deterministic increment (drifting walk).
        #[arg(long)]
        drift: Option<f64>,
        /// Sinusoid amplitude in price units.
        #[arg(long)]
        amplitude: Option<f64>,
        /// Sinusoid period in ticks.
        #[arg(long)]
        period: Option<f64>,
        /// Constant ask - bid.
        #[arg(long)]
        spread: Option<f64>,
        /// Milliseconds between ticks.
        #[arg(long)]
        interval_ms: Option<u64>,
        /// Instrument label written into the stream.
        #[arg(long)]
        instrument: Option<String>,
    },
}

/// Exit class of every library error. 2 = the request was wrong, 3 = the
/// data was wrong, 4 = the numbers broke down.
fn exit_class(err: &Error) -> u8 {
    match err {
        Error::InvalidGenerator(_)
        | Error::InvalidParams(_)
        | Error::InvalidPenalty(_)
        | Error::InvalidStrategy(_)
        | Error::InvalidSpread(_)
        | Error::InvalidBenchmark(_)
        | Error::InvalidReplica(_)
        | Error::InvalidConfig(_)
        | Error::InvalidExponent(_)
        | Error::InvalidHistogram(_) => 2,
        Error::Io { .. }
        | Error::MalformedRow { .. }
        | Error::CrossedQuote { .. }
        | Error::EmptyStream
        | Error::OutOfOrderQuote { .. }
        | Error::NonPositivePrice { .. }
        | Error::InsufficientData { .. } => 3,
        _ => 4,
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure {
            code: exit_class(&err),
            message: err.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn load_config(path: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: 3,
        message: format!("cannot read config {}: {e}", path.display()),
    })?;
    let mut cfg = config::parse_file(&text)?;
    // Fold the overrides in up front so the manifest echoes what really ran.
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(out) = out {
        cfg.report.out_dir = out.display().to_string();
    }
    Ok(cfg)
}

fn cmd_run(config_path: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<(), Failure> {
    let cfg = load_config(config_path, seed, out)?;
    let stream = cfg.build_stream()?;
    let engine_config = cfg.engine_config()?;
    engine_config.validate()?;
    let result = engine::run(&stream, &engine_config)?;
    let dir = PathBuf::from(&cfg.report.out_dir);
    let written = output::write_run_bundle(&dir, &cfg, &stream, &result)?;
    println!(
        "{}: {} ticks, final NAV {:.2} ({:+.4}%), {} files in {}",
        cfg.model,
        stream.len(),
        result.final_nav(),
        result.nav_pct(),
        written,
        dir.display()
    );
    Ok(())
}

enum SweepAxis {
    WindowLen,
    Exponent,
    Func,
    Spread,
    NSets,
}

impl SweepAxis {
    fn parse(name: &str) -> Result<Self, Failure> {
        match name {
            "l_s" => Ok(SweepAxis::WindowLen),
            "Q" => Ok(SweepAxis::Exponent),
            "func" => Ok(SweepAxis::Func),
            "spread" => Ok(SweepAxis::Spread),
            "n_s" => Ok(SweepAxis::NSets),
            other => Err(invalid(format!(
                "unknown sweep axis {other:?}; expected l_s, Q, func, spread or n_s"
            ))),
        }
    }
}

fn parse_value<T: std::str::FromStr>(axis: &str, raw: &str) -> Result<T, Failure> {
    raw.parse()
        .map_err(|_| invalid(format!("axis {axis}: cannot parse value {raw:?}")))
}

fn cmd_sweep(
    config_path: &Path,
    axis_name: &str,
    values: &str,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = load_config(config_path, seed, out)?;
    let axis = SweepAxis::parse(axis_name)?;
    let raw_values: Vec<&str> = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .collect();
    if raw_values.is_empty() {
        return Err(invalid("no sweep values given"));
    }
    let base_stream = cfg.build_stream()?;
    let base_config = cfg.engine_config()?;

    let mut rows = Vec::with_capacity(raw_values.len());
    for raw in &raw_values {
        let mut run_config = base_config.clone();
        let stream: TickStream = match axis {
            SweepAxis::WindowLen => {
                run_config.grid.window_lens = vec![parse_value(axis_name, raw)?];
                base_stream.clone()
            }
            SweepAxis::Exponent => {
                run_config.grid.exponents = vec![parse_value(axis_name, raw)?];
                base_stream.clone()
            }
            SweepAxis::Func => {
                let func = RegularFunction::from_str(raw)?;
                run_config.grid.funcs = vec![func];
                base_stream.clone()
            }
            SweepAxis::NSets => {
                run_config.grid.n_s = Some(parse_value(axis_name, raw)?);
                base_stream.clone()
            }
            SweepAxis::Spread => base_stream.respread(parse_value(axis_name, raw)?)?,
        };
        run_config.validate()?;
        let result = engine::run(&stream, &run_config)?;
        let (mean, sigma) = report::nav_moments(&result.nav);
        rows.push(SweepRow {
            axis_value: raw.to_string(),
            final_nav: result.final_nav(),
            nav_pct: result.nav_pct(),
            mean,
            sigma,
        });
    }

    print!("{}", report::sweep_csv(&rows));
    let dir = PathBuf::from(&cfg.report.out_dir);
    output::write_sweep_bundle(&dir, &cfg, axis_name, &rows)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    model: &str,
    n: usize,
    seed: u64,
    out: &Path,
    overrides: GenOverrides,
) -> Result<(), Failure> {
    let model = config::synthetic_model(model)?;
    let mut params = SyntheticParams::default();
    if let Some(v) = overrides.start {
        params.start = v;
    }
    if let Some(v) = overrides.volatility {
        params.volatility = v;
    }
    if let Some(v) = overrides.drift {
        params.drift = v;
    }
    if let Some(v) = overrides.amplitude {
        params.amplitude = v;
    }
    if let Some(v) = overrides.period {
        params.period = v;
    }
    if let Some(v) = overrides.spread {
        params.spread = v;
    }
    if let Some(v) = overrides.interval_ms {
        params.interval_ms = v;
    }
    if let Some(v) = overrides.instrument {
        params.instrument = v;
    }
    let stream = generate_synthetic(seed, n, model, &params)?;
    output::write_text(out, &report::ticks_csv(&stream))?;
    println!("wrote {} ticks to {}", stream.len(), out.display());
    Ok(())
}

struct GenOverrides {
    start: Option<f64>,
    volatility: Option<f64>,
    drift: Option<f64>,
    amplitude: Option<f64>,
    period: Option<f64>,
    spread: Option<f64>,
    interval_ms: Option<u64>,
    instrument: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, seed, out } => cmd_run(&config, seed, out.as_deref()),
        Command::Sweep {
            config,
            axis,
            values,
            seed,
            out,
        } => cmd_sweep(&config, &axis, &values, seed, out.as_deref()),
        Command::Gen {
            model,
            n,
            seed,
            out,
            start,
            volatility,
            drift,
            amplitude,
            period,
            spread,
            interval_ms,
            instrument,
        } => cmd_gen(
            &model,
            n,
            seed,
            &out,
            GenOverrides {
                start,
                volatility,
                drift,
                amplitude,
                period,
                spread,
                interval_ms,
                instrument,
            },
        ),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_follow_the_exit_contract() {
        assert_eq!(exit_class(&Error::InvalidConfig("x".into())), 2);
        assert_eq!(exit_class(&Error::InvalidStrategy("x".into())), 2);
        assert_eq!(exit_class(&Error::EmptyStream), 3);
        assert_eq!(
            exit_class(&Error::MalformedRow {
                row: 3,
                reason: "x".into()
            }),
            3
        );
        assert_eq!(exit_class(&Error::ZeroVariance), 4);
        assert_eq!(
            exit_class(&Error::NegativeRadicand { radicand: -0.1 }),
            4
        );
    }
}
