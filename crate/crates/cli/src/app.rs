//! Executes a [`RunConfig`] and renders its output.

use std::path::Path;

use puffer_core::estimators::{inference, InferenceResult};
use puffer_core::linalg::{Matrix, Vector};
use puffer_core::preconditioners::{puffer, puffer_scaled, puffer_tau, PreconditionedPair};
use puffer_core::solver::{lambda_grid, lambda_max, solve, solve_path, FitResult, SolverConfig};
use puffer_core::verify::{run_all, TheoremReport, VerifyOutcome, VerifyPlan};
use serde::Serialize;

use crate::config::{
    CommandKind, Format, LambdaSpec, RunConfig, TransformArg, DEFAULT_GRID_COUNT, DEFAULT_GRID_RATIO,
};
use crate::dataset::{load_dataset, write_columns, Dataset};
use crate::error::{CliError, Result, EXIT_OK, EXIT_VERIFY_FAILED};

/// Rendered output and the exit code it implies.
#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    pub exit_code: i32,
}

#[derive(Serialize)]
struct Meta<'a> {
    version: &'static str,
    seed: u64,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    meta: Meta<'a>,
    result: T,
}

#[derive(Serialize)]
struct FitEntry {
    #[serde(flatten)]
    fit: FitResult,
    /// Coefficients mapped back through `N` for the scaled transform.
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_original_scale: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct FitOutput {
    feature_names: Vec<String>,
    transform: TransformArg,
    lambda_max: f64,
    #[serde(flatten)]
    entry: FitEntry,
}

#[derive(Serialize)]
struct PathOutput {
    feature_names: Vec<String>,
    transform: TransformArg,
    lambda_max: f64,
    fits: Vec<FitEntry>,
}

#[derive(Serialize)]
struct PreconditionOutput {
    transform: TransformArg,
    response_name: String,
    feature_names: Vec<String>,
    x_tilde: Vec<Vec<f64>>,
    y_tilde: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_diag: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct InspectOutput {
    feature_names: Vec<String>,
    #[serde(flatten)]
    inference: InferenceResult,
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    plan: &'a VerifyPlan,
    #[serde(flatten)]
    outcome: &'a VerifyOutcome,
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        CommandKind::Fit => fit(cfg),
        CommandKind::Path => path(cfg),
        CommandKind::Precondition => precondition(cfg),
        CommandKind::Verify => verify(cfg),
        CommandKind::Inspect => inspect(cfg),
    }
}

/// Executes and writes the body to `cfg.output_path`, or returns it for
/// standard output when no path is set.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let out = execute(cfg)?;
    if let Some(path) = &cfg.output_path {
        std::fs::write(path, &out.body).map_err(|source| CliError::Io { path: path.clone(), source })?;
        return Ok(Outcome { body: String::new(), exit_code: out.exit_code });
    }
    Ok(out)
}

fn load(cfg: &RunConfig) -> Result<Dataset> {
    let path = cfg.input_path.as_deref().ok_or_else(|| CliError::Usage("--input is required".into()))?;
    load_dataset(Path::new(path), &cfg.response_column)
}

fn envelope<T: Serialize>(cfg: &RunConfig, result: T) -> Result<String> {
    let env = Envelope { meta: Meta { version: env!("CARGO_PKG_VERSION"), seed: cfg.seed, config: cfg }, result };
    let mut s = serde_json::to_string_pretty(&env).map_err(|e| CliError::Usage(format!("serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// The data the solver sees: `(X̃, Ỹ, N)`, untouched for `none`.
struct Prepared {
    x_tilde: Matrix,
    y_tilde: Vector,
    n_diag: Option<Vector>,
}

fn transformed(cfg: &RunConfig, data: &Dataset) -> Result<Prepared> {
    let pair: PreconditionedPair = match cfg.transform {
        TransformArg::None => {
            return Ok(Prepared { x_tilde: data.x.clone(), y_tilde: data.y.clone(), n_diag: None });
        }
        TransformArg::Puffer => puffer(&data.x, &data.y)?,
        TransformArg::PufferScaled => puffer_scaled(&data.x, &data.y)?,
        TransformArg::PufferTau => puffer_tau(&data.x, &data.y, cfg.tau.unwrap_or(0.0))?,
    };
    Ok(Prepared { x_tilde: pair.x_tilde, y_tilde: pair.y_tilde, n_diag: pair.n_diag })
}

fn solver_config(cfg: &RunConfig) -> SolverConfig {
    SolverConfig { rng_seed: cfg.seed, ..SolverConfig::default() }
}

fn entry(fit: FitResult, n_diag: Option<&Vector>) -> FitEntry {
    let beta_original_scale = n_diag.map(|n| fit.beta.iter().zip(n.iter()).map(|(b, s)| b * s).collect());
    FitEntry { fit, beta_original_scale }
}

fn coefficient_csv(names: &[String], fits: &[&FitResult]) -> Result<String> {
    let mut headers = vec!["lambda".to_string(), "converged".to_string()];
    headers.extend(names.iter().cloned());
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Usage(format!("csv output: {e}"));
    w.write_record(&headers).map_err(io)?;
    for f in fits {
        let mut row = vec![f.lambda.to_string(), f.converged.to_string()];
        row.extend(f.beta.iter().map(f64::to_string));
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("csv output: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn fit(cfg: &RunConfig) -> Result<Outcome> {
    let data = load(cfg)?;
    let pair = transformed(cfg, &data)?;
    let LambdaSpec::Single { lambda } = cfg.lambda else {
        return Err(CliError::Usage("fit requires --lambda".into()));
    };
    let fit = solve(&pair.x_tilde, &pair.y_tilde, lambda, &cfg.penalty, None, &solver_config(cfg))?;
    let body = match cfg.output_format {
        Format::Csv => coefficient_csv(&data.feature_names, &[&fit])?,
        Format::Json => envelope(
            cfg,
            FitOutput {
                feature_names: data.feature_names.clone(),
                transform: cfg.transform,
                lambda_max: lambda_max(&pair.x_tilde, &pair.y_tilde),
                entry: entry(fit, pair.n_diag.as_ref()),
            },
        )?,
    };
    Ok(Outcome { body, exit_code: EXIT_OK })
}

fn path(cfg: &RunConfig) -> Result<Outcome> {
    let data = load(cfg)?;
    let pair = transformed(cfg, &data)?;
    let top = lambda_max(&pair.x_tilde, &pair.y_tilde);
    let grid = match &cfg.lambda {
        LambdaSpec::Grid { lambdas } => lambdas.clone(),
        LambdaSpec::DefaultGrid => {
            if !(top > 0.0) {
                return Err(CliError::Usage("lambda_max is zero: the response is orthogonal to every column".into()));
            }
            lambda_grid(top, DEFAULT_GRID_COUNT, DEFAULT_GRID_RATIO)
        }
        _ => return Err(CliError::Usage("path takes --lambda-grid or the default grid".into())),
    };
    let fits = solve_path(&pair.x_tilde, &pair.y_tilde, &grid, &cfg.penalty, &solver_config(cfg))?;
    let body = match cfg.output_format {
        Format::Csv => coefficient_csv(&data.feature_names, &fits.iter().collect::<Vec<_>>())?,
        Format::Json => envelope(
            cfg,
            PathOutput {
                feature_names: data.feature_names.clone(),
                transform: cfg.transform,
                lambda_max: top,
                fits: fits.into_iter().map(|f| entry(f, pair.n_diag.as_ref())).collect(),
            },
        )?,
    };
    Ok(Outcome { body, exit_code: EXIT_OK })
}

fn precondition(cfg: &RunConfig) -> Result<Outcome> {
    let data = load(cfg)?;
    let pair = transformed(cfg, &data)?;
    let body = match cfg.output_format {
        Format::Csv => {
            let mut headers = vec![data.response_name.clone()];
            headers.extend(data.feature_names.iter().cloned());
            let columns: Vec<Vector> = std::iter::once(pair.y_tilde.clone())
                .chain(pair.x_tilde.column_iter().map(|c| c.into_owned()))
                .collect();
            let mut buf = Vec::new();
            write_columns(&mut buf, &headers, &columns)
                .map_err(|e| CliError::Usage(format!("csv output: {e}")))?;
            String::from_utf8(buf).expect("csv output is utf-8")
        }
        Format::Json => envelope(
            cfg,
            PreconditionOutput {
                transform: cfg.transform,
                response_name: data.response_name.clone(),
                feature_names: data.feature_names.clone(),
                x_tilde: pair.x_tilde.row_iter().map(|r| r.iter().copied().collect()).collect(),
                y_tilde: pair.y_tilde.iter().copied().collect(),
                n_diag: pair.n_diag.as_ref().map(|n| n.iter().copied().collect()),
            },
        )?,
    };
    Ok(Outcome { body, exit_code: EXIT_OK })
}

fn inspect(cfg: &RunConfig) -> Result<Outcome> {
    let data = load(cfg)?;
    let (n, p) = (data.n(), data.p());
    if n <= p {
        return Err(CliError::Core(puffer_core::PufferError::Rank(format!(
            "inspect requires n>p for z statistics and p-values, got n={n}, p={p}"
        ))));
    }
    let inf = inference(&data.x, &data.y, cfg.sigma)?;
    let body = match cfg.output_format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Usage(format!("csv output: {e}"));
            w.write_record(["feature", "beta_ols", "z", "p_value"]).map_err(io)?;
            for j in 0..p {
                w.write_record([
                    data.feature_names[j].clone(),
                    inf.beta_ols[j].to_string(),
                    inf.z_stats[j].to_string(),
                    inf.p_values[j].to_string(),
                ])
                .map_err(io)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?).expect("utf-8")
        }
        Format::Json => envelope(cfg, InspectOutput { feature_names: data.feature_names.clone(), inference: inf })?,
    };
    Ok(Outcome { body, exit_code: EXIT_OK })
}

fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let plan = VerifyPlan::with_trials(cfg.seed, cfg.trials.unwrap_or(200));
    let outcome = run_all(&plan)?;
    let exit_code = if outcome.all_passed { EXIT_OK } else { EXIT_VERIFY_FAILED };
    let body = match cfg.output_format {
        Format::Csv => verify_csv(&outcome)?,
        Format::Json => envelope(cfg, VerifyOutput { plan: &plan, outcome: &outcome })?,
    };
    Ok(Outcome { body, exit_code })
}

fn verify_csv(outcome: &VerifyOutcome) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Usage(format!("csv output: {e}"));
    w.write_record(["check", "trials", "comparisons", "excluded", "max_discrepancy", "tolerance", "passed", "seed"])
        .map_err(io)?;
    let name = |r: &TheoremReport| serde_json::to_value(r.theorem_id).ok().and_then(|v| v.as_str().map(String::from));
    for r in outcome.reports.iter().chain(&outcome.supplementary) {
        w.write_record([
            name(r).unwrap_or_default(),
            r.trials.to_string(),
            r.comparisons.to_string(),
            r.excluded.to_string(),
            r.max_discrepancy.to_string(),
            r.tolerance.to_string(),
            r.passed.to_string(),
            r.worst_case_seed.to_string(),
        ])
        .map_err(io)?;
    }
    for c in &outcome.controls {
        let id = serde_json::to_value(c.control_id).ok().and_then(|v| v.as_str().map(String::from));
        w.write_record([
            format!("control_{}", id.unwrap_or_default()),
            c.trials.to_string(),
            c.trials.to_string(),
            "0".to_string(),
            c.max_discrepancy.to_string(),
            c.threshold.to_string(),
            c.passed.to_string(),
            c.strongest_seed.to_string(),
        ])
        .map_err(io)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?).expect("utf-8"))
}
