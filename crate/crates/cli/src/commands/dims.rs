//! `satake dims`: paramodular dimension main terms.

use anyhow::Result;
use serde::Serialize;

use satake_core::paramodular::{dimension_table, write_dimension_csv, DimensionRow};

use super::{Outcome, Output};
use crate::settings::{Setting, Settings, UsageError};

pub const SETTINGS: &[Setting] = &[
    ("weights", "4:4,6:4,10:6,12:10", "weights k1:k2 with k1 >= k2 >= 4"),
    ("levels", "1,2,3,5,6,30", "square-free levels N"),
];

#[derive(Debug, Serialize)]
struct DimsResult {
    rows: Vec<DimensionRow>,
    /// `c_N` lies in `(1, 5)` for `N > 1` and equals 1 at `N = 1`.
    c_n_in_range: bool,
    note: &'static str,
}

fn parse_weight(raw: &str) -> Result<(u32, u32), UsageError> {
    let bad = || UsageError(format!("invalid weight {raw:?}; expected k1:k2"));
    let (a, b) = raw.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn run(settings: &Settings) -> Result<Outcome> {
    let weights = settings
        .list::<String>("weights")?
        .iter()
        .map(|w| parse_weight(w))
        .collect::<Result<Vec<_>, _>>()?;
    let levels: Vec<u64> = settings.list("levels")?;
    let rows = dimension_table(&weights, &levels)?;
    let c_n_in_range = rows
        .iter()
        .all(|r| if r.n == 1 { r.c_n == 1.0 } else { r.c_n > 1.0 && r.c_n < 5.0 });
    let out = Output::create("dims", settings)?;
    out.write_with("dims.csv", |w| write_dimension_csv(&rows, w))?;
    let result = DimsResult {
        rows,
        c_n_in_range,
        note: "main terms only; lower-order terms of the dimension formulas are not modeled",
    };
    out.write_report("dims.json", settings, c_n_in_range, &result)?;
    Ok(Outcome {
        pass: c_n_in_range,
        summary: format!("dims: {} rows", result.rows.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_parse() {
        assert_eq!(parse_weight("10:6").unwrap(), (10, 6));
        assert!(parse_weight("10").is_err());
        assert!(parse_weight("a:b").is_err());
    }
}
