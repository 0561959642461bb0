//! `satake rmt`: ensemble averages of the n-level statistic for Fejer test
//! functions, against the kernel predictions.

use anyhow::{bail, Result};
use serde::Serialize;

use satake_core::rmt::{ensemble_runs, write_samples_csv, EnsembleReport, EnsembleSpec, Group, StatRequest};
use satake_core::stream::z_score;
use satake_core::{PredictionConfig, TestFunction};

use super::{Outcome, Output};
use crate::settings::{Setting, Settings, UsageError};

pub const SETTINGS: &[Setting] = &[
    ("groups", "SOeven", "ensembles: any of SOeven, SOodd, USp, U, O"),
    ("size", "30", "size parameter N"),
    ("samples", "20000", "matrices per ensemble"),
    ("levels", "1", "statistics D^(n) to evaluate, as a list of n"),
    ("beta", "auto", "Fejer support half-width; auto uses 0.9 / n"),
    ("include_zero", "true", "count the forced eigenvalue 1 of SO(2N+1)"),
    ("z_threshold", "3", "fail when any |z| reaches this"),
    ("tol", "1e-8", "tolerance of the kernel quadrature"),
    ("dump", "false", "write per-sample values as CSV"),
];

/// Difference between the `SO(2N+1)` and `USp(2N)` one-level averages,
/// which isolates the forced zero's contribution `phi(0)`.
#[derive(Debug, Clone, Serialize)]
struct DeltaCheck {
    estimate: f64,
    stderr: f64,
    prediction: f64,
    z: f64,
}

#[derive(Debug, Serialize)]
struct RmtResult {
    reports: Vec<EnsembleReport>,
    delta_check: Option<DeltaCheck>,
}

fn beta_for(settings: &Settings, n: usize) -> Result<f64, UsageError> {
    match settings.raw("beta") {
        "auto" => Ok(0.9 / n as f64),
        _ => settings.get("beta"),
    }
}

pub fn run(settings: &Settings) -> Result<Outcome> {
    let groups: Vec<Group> = settings
        .list::<String>("groups")?
        .iter()
        .map(|g| g.parse::<Group>().map_err(|e| UsageError(e.to_string())))
        .collect::<Result<_, _>>()?;
    let levels: Vec<usize> = settings.list("levels")?;
    if levels.is_empty() || groups.is_empty() {
        bail!(UsageError("groups and levels must be nonempty".into()));
    }
    let size: usize = settings.get("size")?;
    let samples: usize = settings.get("samples")?;
    let seed: u64 = settings.get("seed")?;
    let include_zero: bool = settings.get("include_zero")?;
    let threshold: f64 = settings.get("z_threshold")?;
    let dump: bool = settings.get("dump")?;
    let cfg = PredictionConfig {
        tolerance: settings.get("tol")?,
        ..PredictionConfig::default()
    };
    let requests = levels
        .iter()
        .map(|&n| {
            let phi = TestFunction::fejer(beta_for(settings, n)?)?;
            Ok(StatRequest {
                phis: vec![phi; n],
                include_zero,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let out = Output::create("rmt", settings)?;
    let mut reports = Vec::new();
    for &group in &groups {
        let spec = EnsembleSpec::new(group, size, samples, seed)?;
        for run in ensemble_runs(&spec, &requests, &cfg)? {
            if dump {
                let name = format!("rmt_{group}_n{}.csv", run.report.n);
                out.write_with(&name, |w| write_samples_csv(&run.values, w))?;
            }
            reports.push(run.report);
        }
    }

    let one_level = |g: Group| reports.iter().find(|r| r.group == g && r.n == 1);
    let delta_check = match (one_level(Group::SOodd), one_level(Group::USp)) {
        (Some(odd), Some(sp)) if include_zero => {
            let prediction = requests[levels.iter().position(|&n| n == 1).expect("level 1 present")].phis[0].value_at_zero();
            let estimate = odd.mc_mean - sp.mc_mean;
            let stderr = odd.mc_stderr.hypot(sp.mc_stderr);
            Some(DeltaCheck {
                estimate,
                stderr,
                prediction,
                z: z_score(estimate, stderr, prediction),
            })
        }
        _ => None,
    };
    let worst = reports
        .iter()
        .map(|r| r.z_score.abs())
        .chain(delta_check.iter().map(|d| d.z.abs()))
        .fold(0.0, f64::max);
    let pass = worst < threshold;
    let result = RmtResult { reports, delta_check };
    out.write_report("rmt.json", settings, pass, &result)?;
    Ok(Outcome {
        pass,
        summary: format!("rmt: {} report(s), max |z| = {worst:.3}", result.reports.len()),
    })
}
