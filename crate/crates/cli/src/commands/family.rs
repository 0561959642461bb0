//! `satake family`: synthetic families, coefficient averages, joint moments
//! and the `+-` split.

use anyhow::Result;
use serde::Serialize;

use satake_core::family::{
    coefficient_report, generate_family, joint_sato_tate_test, plus_minus_split_test, std_leading_fit,
    write_family_csv, CoefficientReport, EpsilonRule, FamilySpec, JointReport, PlusMinusReport, StdLeadingFit,
    MODEL_NOTE,
};

use super::{Outcome, Output};
use crate::settings::{Setting, Settings, UsageError};

pub const SETTINGS: &[Setting] = &[
    ("primes", "2,3,5", "prime window of the family"),
    ("samples", "100000", "number of forms"),
    ("m", "1,2,4,9,12,36", "indices m of the averaged coefficients"),
    ("rule", "balanced", "root numbers: balanced, or parity:K2 for (-1)^K2"),
    ("joint_primes", "2,3", "primes of the joint moment test; empty to skip"),
    ("degree", "2", "largest total degree of the joint moments"),
    ("z_threshold", "3", "fail when any |z| reaches this"),
    ("dump", "false", "write the family as CSV"),
];

#[derive(Debug, Serialize)]
struct FamilyResult {
    note: &'static str,
    forms: usize,
    averages: Vec<CoefficientReport>,
    joint: Option<JointReport>,
    split: Vec<PlusMinusReport>,
    std_fit: StdLeadingFit,
}

fn parse_rule(raw: &str) -> Result<EpsilonRule, UsageError> {
    match raw.split_once(':') {
        None if raw == "balanced" => Ok(EpsilonRule::Balanced),
        Some(("parity", k2)) => k2
            .parse()
            .map(EpsilonRule::LevelOneParity)
            .map_err(|e| UsageError(format!("invalid k2 in rule {raw:?}: {e}"))),
        _ => Err(UsageError(format!("unknown rule {raw:?}; use balanced or parity:K2"))),
    }
}

pub fn run(settings: &Settings) -> Result<Outcome> {
    let primes: Vec<u64> = settings.list("primes")?;
    let forms: usize = settings.get("samples")?;
    let ms: Vec<u64> = settings.list("m")?;
    let rule = parse_rule(settings.raw("rule"))?;
    let joint_primes: Vec<u64> = settings.list("joint_primes")?;
    let degree: u32 = settings.get("degree")?;
    let threshold: f64 = settings.get("z_threshold")?;
    let dump: bool = settings.get("dump")?;
    let seed: u64 = settings.get("seed")?;

    let spec = FamilySpec::new(&primes, forms, seed, rule)?;
    let out = Output::create("family", settings)?;
    let family = generate_family(&spec)?;
    if dump {
        out.write_with("family.csv", |w| write_family_csv(&family, w))?;
    }
    let averages = ms.iter().map(|&m| coefficient_report(&family, m)).collect::<satake_core::Result<Vec<_>>>()?;
    let joint = if joint_primes.is_empty() {
        None
    } else {
        Some(joint_sato_tate_test(&family, &joint_primes, degree)?)
    };
    let split = if rule == EpsilonRule::Balanced {
        ms.iter().map(|&m| plus_minus_split_test(&family, m)).collect::<satake_core::Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let std_fit = std_leading_fit(&family)?;

    let worst = averages
        .iter()
        .map(|r| r.z.abs())
        .chain(joint.iter().map(|j| j.max_abs_z))
        .chain(split.iter().flat_map(|s| [s.plus.z.abs(), s.minus.z.abs()]))
        .fold(0.0, f64::max);
    let pass = worst < threshold;
    let result = FamilyResult {
        note: MODEL_NOTE,
        forms,
        averages,
        joint,
        split,
        std_fit,
    };
    out.write_report("family.json", settings, pass, &result)?;
    Ok(Outcome {
        pass,
        summary: format!("family: {forms} forms, max |z| = {worst:.3}"),
    })
}
