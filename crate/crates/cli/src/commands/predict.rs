//! `satake predict`: the kernel prediction for Fejer test functions.

use anyhow::Result;
use serde::Serialize;

use satake_core::kernels::{n_level_prediction, rubinstein_rhs};
use satake_core::{PredictionConfig, PredictionReport, Sign, SymmetryType, TestFunction};

use super::{Outcome, Output};
use crate::settings::{Setting, Settings, UsageError};

pub const SETTINGS: &[Setting] = &[
    ("symmetry", "SOeven", "U, SOeven, SOodd, O or Sp"),
    ("n", "1", "level n"),
    ("beta", "auto", "comma-separated Fejer widths, one per factor or one for all; auto uses 0.9 / n"),
    ("method", "determinant", "determinant, or combinatorial for SOeven/Sp"),
    ("tol", "1e-8", "quadrature tolerance"),
];

#[derive(Debug, Serialize)]
struct PredictResult {
    report: PredictionReport,
}

pub fn run(settings: &Settings) -> Result<Outcome> {
    let g: SymmetryType = settings
        .raw("symmetry")
        .parse()
        .map_err(|e: satake_core::Error| UsageError(e.to_string()))?;
    let n: usize = settings.get("n")?;
    let betas: Vec<f64> = match settings.raw("beta") {
        "auto" => vec![0.9 / n as f64; n],
        _ => settings.list("beta")?,
    };
    let betas = match betas.len() {
        1 => vec![betas[0]; n],
        k if k == n => betas,
        k => return Err(UsageError(format!("{k} beta values for n = {n}")).into()),
    };
    let phis = betas.iter().map(|&b| TestFunction::fejer(b)).collect::<satake_core::Result<Vec<_>>>()?;
    let cfg = PredictionConfig {
        tolerance: settings.get("tol")?,
        ..PredictionConfig::default()
    };
    let report = match settings.raw("method") {
        "determinant" => n_level_prediction(g, &phis, &cfg)?,
        "combinatorial" => {
            let sign = match g {
                SymmetryType::SOeven => Sign::Plus,
                SymmetryType::Sp => Sign::Minus,
                _ => return Err(UsageError("the combinatorial route covers SOeven and Sp".into()).into()),
            };
            rubinstein_rhs(sign, &phis, &cfg)?
        }
        other => return Err(UsageError(format!("unknown method {other:?}")).into()),
    };
    let out = Output::create("predict", settings)?;
    out.write_report("predict.json", settings, true, &PredictResult { report: report.clone() })?;
    Ok(Outcome {
        pass: true,
        summary: format!("predict: {g} n={n} value = {:.12}", report.value),
    })
}
