//! Main terms of paramodular dimension formulas at square-free level, the
//! inclusion-exclusion that isolates newform traces, and the Atkin-Lehner
//! `+-` trace split.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::arith::{divisors, factorize, is_square_free};
use crate::error::{Error, Result};
use crate::sign::Sign;

/// `2^7 3^3 5` and `2^8 3^3 5`.
const OLD_DENOMINATOR: f64 = 17_280.0;
const NEW_DENOMINATOR: f64 = 34_560.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelData {
    #[serde(rename = "N")]
    pub n: u64,
    pub factorization: Vec<u64>,
    pub omega: u32,
}

impl LevelData {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 || !is_square_free(n) {
            return Err(Error::Domain(format!("level {n} is not a square-free positive integer")));
        }
        let factorization: Vec<u64> = factorize(n).into_iter().map(|(p, _)| p).collect();
        Ok(LevelData {
            n,
            omega: factorization.len() as u32,
            factorization,
        })
    }

    /// `c_N = prod_{p | N} (1 + p^-2)`, so that `prod (p^2 + 1) = c_N N^2`.
    pub fn c_n(&self) -> f64 {
        self.factorization.iter().map(|&p| 1.0 + 1.0 / (p * p) as f64).product()
    }
}

/// Number of distinct prime factors.
pub fn omega(m: u64) -> u32 {
    crate::arith::omega(m)
}

fn check_weight(k1: u32, k2: u32) -> Result<()> {
    if k2 < 4 || k1 < k2 {
        return Err(Error::WeightRange {
            k1,
            k2,
            reason: "dimension main terms need k1 >= k2 >= 4",
        });
    }
    Ok(())
}

fn weight_polynomial(k1: u32, k2: u32) -> f64 {
    let (k1, k2) = (f64::from(k1), f64::from(k2));
    (k1 - 1.0) * (k2 - 2.0) * (k1 - k2 + 1.0) * (k1 + k2 - 3.0)
}

/// `(k1-1)(k2-2)(k1-k2+1)(k1+k2-3) prod (p^2+1) / 17280`.
pub fn dim_main_term(k1: u32, k2: u32, level: &LevelData) -> Result<f64> {
    check_weight(k1, k2)?;
    let level_factor: f64 = level.factorization.iter().map(|&p| (p * p + 1) as f64).product();
    Ok(weight_polynomial(k1, k2) * level_factor / OLD_DENOMINATOR)
}

/// Main term of each `+-` newform space:
/// `(k1-1)(k2-2)(k1-k2+1)(k1+k2-3) prod (p^2-1) / 34560`.
pub fn dim_newform_main_term(k1: u32, k2: u32, level: &LevelData) -> Result<f64> {
    check_weight(k1, k2)?;
    let level_factor: f64 = level.factorization.iter().map(|&p| (p * p - 1) as f64).product();
    Ok(weight_polynomial(k1, k2) * level_factor / NEW_DENOMINATOR)
}

/// Traces on the spaces of level `N / M`, keyed by the divisor `M`'s
/// cofactor, i.e. by the level itself.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceTable(pub BTreeMap<u64, f64>);

impl TraceTable {
    /// The same value at every divisor of `n`.
    pub fn constant(n: u64, value: f64) -> Self {
        TraceTable(divisors(n).into_iter().map(|d| (d, value)).collect())
    }

    pub fn get(&self, d: u64) -> Result<f64> {
        self.0.get(&d).copied().ok_or(Error::MissingDivisor(d))
    }
}

/// `sum_{M | N} (-2)^{omega(M)} traces[N / M]`.
pub fn newform_trace(traces: &TraceTable, level: &LevelData) -> Result<f64> {
    let mut acc = 0.0;
    for m in divisors(level.n) {
        let w = (-2f64).powi(omega(m) as i32);
        acc += w * traces.get(level.n / m)?;
    }
    Ok(acc)
}

/// The forward relation: `traces[N] = sum_{M | N} 2^{omega(M)} new[N / M]`.
pub fn oldform_trace(newforms: &TraceTable, level: &LevelData) -> Result<f64> {
    let mut acc = 0.0;
    for m in divisors(level.n) {
        acc += f64::from(1u32 << omega(m)) * newforms.get(level.n / m)?;
    }
    Ok(acc)
}

/// `(tr + s tr_AL) / 2` and `(tr - s tr_AL) / 2` with `s = (-1)^{k2}`.
pub fn pm_trace_split(trace_plain: f64, trace_atkin_lehner: f64, k2: u32) -> (f64, f64) {
    let signed = Sign::from_parity(i64::from(k2)).as_f64() * trace_atkin_lehner;
    (0.5 * (trace_plain + signed), 0.5 * (trace_plain - signed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionRow {
    pub k1: u32,
    pub k2: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub dim_main: f64,
    pub dim_new_main: f64,
    pub c_n: f64,
}

/// Rows for every weight and level, sorted by `(k1, k2, N)`. Lower-order
/// terms of the dimension formulas are not modeled.
pub fn dimension_table(weights: &[(u32, u32)], levels: &[u64]) -> Result<Vec<DimensionRow>> {
    let mut rows = Vec::new();
    for &(k1, k2) in weights {
        for &n in levels {
            let level = LevelData::new(n)?;
            rows.push(DimensionRow {
                k1,
                k2,
                n,
                dim_main: dim_main_term(k1, k2, &level)?,
                dim_new_main: dim_newform_main_term(k1, k2, &level)?,
                c_n: level.c_n(),
            });
        }
    }
    rows.sort_by_key(|r| (r.k1, r.k2, r.n));
    rows.dedup_by_key(|r| (r.k1, r.k2, r.n));
    Ok(rows)
}

pub fn write_dimension_csv<W: Write + ?Sized>(rows: &[DimensionRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "k1,k2,N,dim_main,dim_new_main,c_N")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.k1, r.k2, r.n, r.dim_main, r.dim_new_main, r.c_n)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn level(n: u64) -> LevelData {
        LevelData::new(n).unwrap()
    }

    #[test]
    fn level_data() {
        let l = level(30);
        assert_eq!(l.factorization, vec![2, 3, 5]);
        assert_eq!(l.omega, 3);
        assert!(LevelData::new(12).is_err());
        assert!(LevelData::new(0).is_err());
        assert_eq!(level(1).omega, 0);
    }

    #[test]
    fn omega_values() {
        assert_eq!(omega(1), 0);
        assert_eq!(omega(30), 3);
        assert_eq!(omega(12), 2);
    }

    #[test]
    fn main_term_values() {
        let base = dim_main_term(4, 4, &level(1)).unwrap();
        assert_eq!(base, 30.0 / 17280.0);
        assert!((base - 0.0017361).abs() < 1e-7);
        assert_eq!(dim_main_term(4, 4, &level(2)).unwrap(), 5.0 * base);
        let new2 = dim_newform_main_term(4, 4, &level(2)).unwrap();
        assert_eq!(new2, 30.0 * 3.0 / 34560.0);
        assert_eq!(dim_newform_main_term(7, 5, &level(1)).unwrap(), 6.0 * 3.0 * 3.0 * 9.0 / 34560.0);
        assert!(matches!(dim_main_term(5, 3, &level(1)), Err(Error::WeightRange { .. })));
        assert!(dim_newform_main_term(4, 5, &level(1)).is_err());
    }

    #[test]
    fn main_term_ratios() {
        for n in [1, 2, 3, 6, 30, 1001] {
            let l = level(n);
            let (old, new) = (dim_main_term(9, 6, &l).unwrap(), dim_newform_main_term(9, 6, &l).unwrap());
            let plus: f64 = l.factorization.iter().map(|&p| (p * p + 1) as f64).product();
            let minus: f64 = l.factorization.iter().map(|&p| (p * p - 1) as f64).product();
            assert!((old / dim_main_term(9, 6, &level(1)).unwrap() - plus).abs() <= 1e-12 * plus);
            assert!((new / old - 0.5 * minus / plus).abs() < 1e-15);
            let c = l.c_n();
            assert!((1.0..5.0).contains(&c));
            assert!((plus - c * (n * n) as f64).abs() <= 1e-9 * plus);
        }
        assert!(level(2).c_n() > 1.0);
    }

    #[test]
    fn newform_trace_examples() {
        assert_eq!(newform_trace(&TraceTable::constant(6, 1.0), &level(6)).unwrap(), 1.0);
        let mut t = TraceTable::default();
        t.0.insert(1, 3.5);
        assert_eq!(newform_trace(&t, &level(1)).unwrap(), 3.5);
        assert_eq!(newform_trace(&t, &level(2)).unwrap_err(), Error::MissingDivisor(2));
    }

    #[test]
    fn pm_split_examples() {
        assert_eq!(pm_trace_split(3.0, 0.0, 7), (1.5, 1.5));
        assert_eq!(pm_trace_split(3.0, 1.0, 4), (2.0, 1.0));
        assert_eq!(pm_trace_split(3.0, 1.0, 5), (1.0, 2.0));
    }

    #[test]
    fn dimension_table_is_sorted() {
        let rows = dimension_table(&[(6, 4), (4, 4)], &[6, 1, 2]).unwrap();
        let keys: Vec<_> = rows.iter().map(|r| (r.k1, r.k2, r.n)).collect();
        assert_eq!(keys, vec![(4, 4, 1), (4, 4, 2), (4, 4, 6), (6, 4, 1), (6, 4, 2), (6, 4, 6)]);
        let mut buf = Vec::new();
        write_dimension_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k1,k2,N,dim_main,dim_new_main,c_N\n"));
        assert_eq!(text.lines().count(), 7);
    }

    proptest! {
        #[test]
        fn inclusion_exclusion_inverts_the_forward_relation(
            n in prop::sample::select(vec![1u64, 2, 6, 30]),
            values in prop::collection::vec(-1000i32..1000, 8),
        ) {
            let l = level(n);
            let new = TraceTable(divisors(n).into_iter().zip(values).map(|(d, v)| (d, f64::from(v))).collect());
            let old = TraceTable(
                divisors(n)
                    .into_iter()
                    .map(|d| (d, oldform_trace(&new, &level(d)).unwrap()))
                    .collect(),
            );
            prop_assert_eq!(newform_trace(&old, &l).unwrap(), new.get(n).unwrap());
        }

        #[test]
        fn split_halves_sum_back(t in -1i64 << 40..1 << 40, al in -1i64 << 40..1 << 40, x in -1e6f64..1e6, k2 in 3u32..40) {
            // Traces are integers, where the halves are exact.
            let (plus, minus) = pm_trace_split(t as f64, al as f64, k2);
            prop_assert_eq!(plus + minus, t as f64);
            let (plus, minus) = pm_trace_split(x, 0.75 * x, k2);
            prop_assert!((plus + minus - x).abs() <= 2.0 * f64::EPSILON * x.abs());
        }

        #[test]
        fn main_terms_are_positive(k2 in 4u32..60, gap in 0u32..60) {
            let k1 = k2 + gap;
            prop_assert!(dim_main_term(k1, k2, &level(1)).unwrap() > 0.0);
            prop_assert!(dim_newform_main_term(k1, k2, &level(6)).unwrap() > 0.0);
        }
    }
}
