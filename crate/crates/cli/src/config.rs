//! Command-line arguments and the validated run configuration built from them.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use puffer_core::penalties::{PenaltyKind, PenaltySpec};
use serde::Serialize;

use crate::dataset::ColumnRef;
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "puffer", version, about = "Preconditioned penalized least squares")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one penalized regression at a single lambda.
    Fit(RunArgs),
    /// Fit a warm-started regularization path.
    Path(RunArgs),
    /// Write the preconditioned design and response.
    Precondition(RunArgs),
    /// Run the randomized equivalence checks.
    Verify(RunArgs),
    /// OLS coefficients, Z statistics and p-values.
    Inspect(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Fit,
    Path,
    Precondition,
    Verify,
    Inspect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyArg {
    Lasso,
    Enet,
    Scad,
    Mcp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum TransformArg {
    None,
    Puffer,
    PufferScaled,
    PufferTau,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Response column: header name or zero-based index.
    #[arg(long, default_value = "0")]
    pub response: String,
    #[arg(long, value_enum, default_value = "lasso")]
    pub penalty: PenaltyArg,
    /// enet alpha, SCAD a or MC+ gamma; defaults 0.5, 3.7 and 3.
    #[arg(long)]
    pub penalty_param: Option<f64>,
    /// Penalty level for `fit`, on the ½‖y − Xb‖² + λ Σ pen(b_j) scale.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Comma-separated penalty levels for `path`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub lambda_grid: Option<Vec<f64>>,
    /// Ridge parameter for the puffer_tau transform.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Known noise level; otherwise estimated from the OLS residuals.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_enum)]
    pub transform: Option<TransformArg>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Base trial count for `verify`.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LambdaSpec {
    Single { lambda: f64 },
    Grid { lambdas: Vec<f64> },
    /// 50 log-spaced values from λ_max down to 1e-4·λ_max.
    DefaultGrid,
    Unused,
}

pub const DEFAULT_GRID_COUNT: usize = 50;
pub const DEFAULT_GRID_RATIO: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_path: Option<String>,
    pub response_column: ColumnRef,
    pub penalty: PenaltySpec,
    pub lambda: LambdaSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub transform: TransformArg,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    pub output_format: Format,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn penalty_spec(kind: PenaltyArg, param: Option<f64>) -> Result<PenaltySpec> {
    let kind = match kind {
        PenaltyArg::Lasso => PenaltyKind::Lasso,
        PenaltyArg::Enet => PenaltyKind::ElasticNet,
        PenaltyArg::Scad => PenaltyKind::Scad,
        PenaltyArg::Mcp => PenaltyKind::Mcp,
    };
    match (kind, param) {
        (PenaltyKind::Lasso, Some(_)) => Err(usage("lasso takes no --penalty-param")),
        (_, None) => Ok(PenaltySpec::default_for(kind)),
        (_, Some(v)) => Ok(PenaltySpec { kind, param: v }.validated()?),
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("{name} must be finite and nonnegative, got {v}")))
    }
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let (command, args) = match cli.command {
            Command::Fit(a) => (CommandKind::Fit, a),
            Command::Path(a) => (CommandKind::Path, a),
            Command::Precondition(a) => (CommandKind::Precondition, a),
            Command::Verify(a) => (CommandKind::Verify, a),
            Command::Inspect(a) => (CommandKind::Inspect, a),
        };
        Self::from_args(command, args)
    }

    pub fn from_args(command: CommandKind, a: RunArgs) -> Result<Self> {
        let needs_input = command != CommandKind::Verify;
        if needs_input && a.input.is_none() {
            return Err(usage("--input is required"));
        }
        let penalty = penalty_spec(a.penalty, a.penalty_param)?;

        let lambda = match (command, a.lambda, a.lambda_grid) {
            (_, Some(_), Some(_)) => return Err(usage("give only one of --lambda and --lambda-grid")),
            (CommandKind::Fit, Some(l), None) => {
                check_nonneg("--lambda", l)?;
                LambdaSpec::Single { lambda: l }
            }
            (CommandKind::Fit, None, _) => return Err(usage("fit requires --lambda")),
            (CommandKind::Path, None, Some(mut grid)) => {
                if grid.is_empty() {
                    return Err(usage("--lambda-grid is empty"));
                }
                for &l in &grid {
                    check_nonneg("--lambda-grid value", l)?;
                }
                grid.sort_by(|x, y| y.total_cmp(x));
                if grid.windows(2).any(|w| w[0] == w[1]) {
                    return Err(usage("--lambda-grid has repeated values"));
                }
                LambdaSpec::Grid { lambdas: grid }
            }
            (CommandKind::Path, None, None) => LambdaSpec::DefaultGrid,
            (CommandKind::Path, Some(_), None) => return Err(usage("path takes --lambda-grid, not --lambda")),
            (_, None, None) => LambdaSpec::Unused,
            _ => return Err(usage("--lambda and --lambda-grid apply only to fit and path")),
        };

        let transform = match (command, a.transform) {
            (CommandKind::Precondition, None) => TransformArg::Puffer,
            (CommandKind::Precondition, Some(TransformArg::None)) => {
                return Err(usage("precondition needs a transform other than none"))
            }
            (CommandKind::Fit | CommandKind::Path | CommandKind::Precondition, t) => t.unwrap_or(TransformArg::None),
            (_, Some(_)) => return Err(usage("--transform applies only to fit, path and precondition")),
            (_, None) => TransformArg::None,
        };
        match (transform, a.tau) {
            (TransformArg::PufferTau, None) => return Err(usage("transform puffer_tau requires --tau")),
            (TransformArg::PufferTau, Some(t)) => check_nonneg("--tau", t)?,
            (_, Some(_)) => return Err(usage("--tau applies only to transform puffer_tau")),
            _ => {}
        }
        if let Some(s) = a.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(usage(format!("--sigma must be positive and finite, got {s}")));
            }
            if command != CommandKind::Inspect {
                return Err(usage("--sigma applies only to inspect"));
            }
        }
        if command == CommandKind::Verify && a.trials == 0 {
            return Err(usage("--trials must be positive"));
        }

        Ok(RunConfig {
            command,
            input_path: a.input.map(|p| p.display().to_string()),
            response_column: ColumnRef::Name(a.response),
            penalty,
            lambda,
            tau: a.tau,
            sigma: a.sigma,
            transform,
            seed: a.seed,
            trials: (command == CommandKind::Verify).then_some(a.trials),
            output_path: a.output.map(|p| p.display().to_string()),
            output_format: a.format,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig> {
        let mut full = vec!["puffer"];
        full.extend_from_slice(args);
        RunConfig::from_cli(Cli::try_parse_from(full).map_err(|e| usage(e.to_string()))?)
    }

    #[test]
    fn fit_needs_exactly_one_lambda() {
        assert!(parse(&["fit", "--input", "a.csv", "--lambda", "0.1"]).is_ok());
        assert!(parse(&["fit", "--input", "a.csv"]).is_err());
        assert!(parse(&["fit", "--input", "a.csv", "--lambda", "-1"]).is_err());
        assert!(parse(&["fit", "--input", "a.csv", "--lambda", "1", "--lambda-grid", "1,2"]).is_err());
    }

    #[test]
    fn path_grid_is_sorted_descending() {
        let c = parse(&["path", "--input", "a.csv", "--lambda-grid", "0.1,1,0.5"]).unwrap();
        assert_eq!(c.lambda, LambdaSpec::Grid { lambdas: vec![1.0, 0.5, 0.1] });
        let c = parse(&["path", "--input", "a.csv"]).unwrap();
        assert_eq!(c.lambda, LambdaSpec::DefaultGrid);
        assert!(parse(&["path", "--input", "a.csv", "--lambda-grid", "1,1"]).is_err());
    }

    #[test]
    fn tau_goes_with_puffer_tau() {
        assert!(parse(&["fit", "--input", "a", "--lambda", "1", "--transform", "puffer_tau"]).is_err());
        assert!(parse(&["fit", "--input", "a", "--lambda", "1", "--transform", "puffer_tau", "--tau", "0.5"]).is_ok());
        assert!(parse(&["fit", "--input", "a", "--lambda", "1", "--tau", "0.5"]).is_err());
    }

    #[test]
    fn penalty_parameters() {
        let c = parse(&["fit", "--input", "a", "--lambda", "1", "--penalty", "mcp"]).unwrap();
        assert_eq!(c.penalty, PenaltySpec::default_for(PenaltyKind::Mcp));
        let c = parse(&["fit", "--input", "a", "--lambda", "1", "--penalty", "scad", "--penalty-param", "4"]).unwrap();
        assert_eq!(c.penalty.param, 4.0);
        assert!(parse(&["fit", "--input", "a", "--lambda", "1", "--penalty", "scad", "--penalty-param", "1.5"]).is_err());
        assert!(parse(&["fit", "--input", "a", "--lambda", "1", "--penalty-param", "2"]).is_err());
    }

    #[test]
    fn verify_needs_no_input() {
        let c = parse(&["verify", "--seed", "5", "--trials", "20"]).unwrap();
        assert_eq!((c.seed, c.trials), (5, Some(20)));
        assert!(parse(&["verify", "--trials", "0"]).is_err());
        assert!(parse(&["inspect"]).is_err());
    }
}
