//! `satake density`: the normalized density of `mu_p` on a grid.

use anyhow::Result;
use serde::Serialize;

use satake_core::measures::{integrate, write_density_csv, MeasureSpec};

use super::{Outcome, Output};
use crate::settings::{Setting, Settings};

pub const SETTINGS: &[Setting] = &[
    ("primes", "3", "primes p, one density file each"),
    ("grid", "101", "points per axis of the grid on [-2, 2]"),
    ("tol", "1e-8", "allowed deviation of the total mass from 1"),
];

#[derive(Debug, Serialize)]
struct Record {
    p: u64,
    grid: usize,
    /// Full-square mass of the printed density.
    normalization: f64,
    /// `2 (p + 1)^2 / (p^2 + 1)`.
    normalization_closed_form: f64,
    total_mass: f64,
    total_mass_error: f64,
}

pub fn run(settings: &Settings) -> Result<Outcome> {
    let primes: Vec<u64> = settings.list("primes")?;
    let grid: usize = settings.get("grid")?;
    let tol: f64 = settings.get("tol")?;
    let out = Output::create("density", settings)?;
    let mut records = Vec::new();
    for &p in &primes {
        let spec = MeasureSpec::mu_p(p)?;
        let mut csv = Vec::new();
        write_density_csv(&spec, grid, &mut csv)?;
        out.write(&format!("density_p{p}.csv"), &csv)?;
        let mass = integrate(&spec, |_, _| 1.0)?;
        let q = p as f64;
        records.push(Record {
            p,
            grid,
            normalization: spec.normalization,
            normalization_closed_form: 2.0 * (q + 1.0).powi(2) / (q * q + 1.0),
            total_mass: mass.value,
            total_mass_error: mass.error,
        });
    }
    let worst = records.iter().map(|r| (r.total_mass - 1.0).abs()).fold(0.0, f64::max);
    let pass = worst < tol;
    out.write_report("density.json", settings, pass, &records)?;
    Ok(Outcome {
        pass,
        summary: format!("density: {} prime(s), max |mass - 1| = {worst:.3e}", records.len()),
    })
}
