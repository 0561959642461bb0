//! `satake moments`: quadrature moments of `lambda~(p^n)` against the
//! main term `sum_{i <= n/2} p^{-n/2 - 2i}`.

use anyhow::Result;
use serde::Serialize;

use satake_core::family::prime_power_main_term;
use satake_core::hecke::{spin_dirichlet_coeff, SpinSatake};
use satake_core::measures::{integrate, MeasureSpec, SatakePoint};

use super::{Outcome, Output};
use crate::settings::{Setting, Settings};

pub const SETTINGS: &[Setting] = &[
    ("primes", "2,3,5", "primes p"),
    ("n_max", "6", "largest exponent n"),
    ("tol", "1e-6", "allowed |quadrature - prediction|"),
];

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub p: u64,
    pub n: u32,
    pub quadrature: f64,
    pub quadrature_error: f64,
    pub prediction: f64,
    pub delta: f64,
}

/// `int lambda~(p^n) d mu_p` for `n = 1..=n_max`.
pub fn moment_rows(p: u64, n_max: u32) -> satake_core::Result<Vec<Row>> {
    let spec = MeasureSpec::mu_p(p)?;
    (1..=n_max)
        .map(|n| {
            let q = integrate(&spec, |x, y| {
                SatakePoint::new(x, y)
                    .map(|pt| spin_dirichlet_coeff(SpinSatake::from_point(pt), n as usize))
                    .unwrap_or(f64::NAN)
            })?;
            let prediction = prime_power_main_term(p, n);
            Ok(Row {
                p,
                n,
                quadrature: q.value,
                quadrature_error: q.error,
                prediction,
                delta: q.value - prediction,
            })
        })
        .collect()
}

pub fn run(settings: &Settings) -> Result<Outcome> {
    let primes: Vec<u64> = settings.list("primes")?;
    let n_max: u32 = settings.get("n_max")?;
    let tol: f64 = settings.get("tol")?;
    let out = Output::create("moments", settings)?;
    let mut rows = Vec::new();
    for &p in &primes {
        rows.extend(moment_rows(p, n_max)?);
    }
    let worst = rows.iter().map(|r| r.delta.abs()).fold(0.0, f64::max);
    let pass = worst < tol;
    out.write_report("moments.json", settings, pass, &rows)?;
    Ok(Outcome {
        pass,
        summary: format!("moments: {} rows, max |delta| = {worst:.3e}", rows.len()),
    })
}
