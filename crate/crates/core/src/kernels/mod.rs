//! Katz-Sarnak n-level densities.
//!
//! `W(G)` is a determinant of the kernel
//! `K_eps(x, y) = S(x - y) + eps S(x + y)`, `S(x) = sin(pi x) / (pi x)`,
//! with an extra delta term for `SO(odd)`. Two independent routes compute
//! `int phi(x) W(G)(x) dx` for product test functions:
//!
//! * [`n_level_prediction`] expands the determinant over permutations and
//!   evaluates each cycle integral exactly in Fourier space, where it becomes
//!   the trace of a product of integral operators on `[-1/2, 1/2]`;
//! * [`rubinstein_rhs`] evaluates the combinatorial sum over set partitions,
//!   even subsets and pairings.

mod combinatorics;
mod determinant;
mod rubinstein;
mod test_function;

use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sign::Sign;

pub use combinatorics::{enumerate_pairings, enumerate_partitions, factorial, PartitionStructure, MAX_PARTITION_SIZE};
pub use determinant::n_level_prediction;
pub use rubinstein::rubinstein_rhs;
pub use test_function::{TestFunction, SUPPORT_SLACK};

/// The five symmetry types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryType {
    U,
    SOeven,
    SOodd,
    O,
    Sp,
}

impl SymmetryType {
    pub const ALL: [SymmetryType; 5] = [
        SymmetryType::U,
        SymmetryType::SOeven,
        SymmetryType::SOodd,
        SymmetryType::O,
        SymmetryType::Sp,
    ];

    /// Kernel sign; `None` for `O`, which mixes both signs.
    pub fn epsilon(self) -> Option<i8> {
        match self {
            SymmetryType::U => Some(0),
            SymmetryType::SOeven => Some(1),
            SymmetryType::SOodd | SymmetryType::Sp => Some(-1),
            SymmetryType::O => None,
        }
    }

    pub fn has_delta(self) -> bool {
        self == SymmetryType::SOodd
    }

    pub fn name(self) -> &'static str {
        match self {
            SymmetryType::U => "U",
            SymmetryType::SOeven => "SOeven",
            SymmetryType::SOodd => "SOodd",
            SymmetryType::O => "O",
            SymmetryType::Sp => "Sp",
        }
    }

    /// The continuous part of the expansion with this sign.
    pub fn from_sign(sign: Sign) -> Self {
        match sign {
            Sign::Plus => SymmetryType::SOeven,
            Sign::Minus => SymmetryType::Sp,
        }
    }
}

impl std::fmt::Display for SymmetryType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SymmetryType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "u" => Ok(SymmetryType::U),
            "soeven" | "so_even" | "so-even" => Ok(SymmetryType::SOeven),
            "soodd" | "so_odd" | "so-odd" => Ok(SymmetryType::SOodd),
            "o" => Ok(SymmetryType::O),
            "sp" | "usp" => Ok(SymmetryType::Sp),
            _ => Err(Error::Domain(format!("unknown symmetry type {s:?}"))),
        }
    }
}

fn sinc(x: f64) -> f64 {
    let y = std::f64::consts::PI * x;
    if y.abs() < 1e-8 {
        1.0 - y * y / 6.0
    } else {
        y.sin() / y
    }
}

/// `K_eps(x, y)`.
pub fn kernel_eval(epsilon: i8, x: f64, y: f64) -> f64 {
    sinc(x - y) + f64::from(epsilon) * sinc(x + y)
}

fn kernel_det(epsilon: i8, x: &[f64]) -> f64 {
    let n = x.len();
    DMatrix::from_fn(n, n, |j, k| kernel_eval(epsilon, x[j], x[k])).determinant()
}

/// Continuous part of `W(G)(x)`.
pub fn density_w(g: SymmetryType, x: &[f64]) -> f64 {
    if x.is_empty() {
        return 1.0;
    }
    match g.epsilon() {
        Some(eps) => kernel_det(eps, x),
        None => 0.5 * (kernel_det(1, x) + kernel_det(-1, x)),
    }
}

/// Numerical settings shared by both prediction routes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionConfig {
    /// Admissible support half-width; `None` means `0.9 / n`.
    pub beta_n: Option<f64>,
    /// Target absolute accuracy of the extrapolated value.
    pub tolerance: f64,
    /// Coarsest operator grid on `[-1/2, 1/2]` has `det_min_cells` cells.
    pub det_min_cells: usize,
    /// Number of operator grids, each doubling the previous one.
    pub det_levels: usize,
    /// Coarsest convolution step.
    pub conv_step: f64,
    /// Number of convolution grids, each halving the step.
    pub conv_levels: usize,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        PredictionConfig {
            beta_n: None,
            tolerance: 1e-8,
            det_min_cells: 100,
            det_levels: 5,
            conv_step: 1e-3,
            conv_levels: 5,
        }
    }
}

impl PredictionConfig {
    pub fn beta_limit(&self, n: usize) -> f64 {
        self.beta_n.unwrap_or(0.9 / n as f64)
    }

    fn check_support(&self, phis: &[TestFunction]) -> Result<()> {
        let limit = self.beta_limit(phis.len().max(1));
        for phi in phis {
            if phi.beta() > limit + SUPPORT_SLACK {
                return Err(Error::SupportViolation {
                    beta: phi.beta(),
                    limit,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Determinant,
    Combinatorial,
}

/// JSON-facing result of either prediction route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub symmetry: SymmetryType,
    pub n: usize,
    /// Largest support half-width among the inputs.
    pub beta: f64,
    pub value: f64,
    pub method: Method,
    pub quadrature_error: f64,
}

fn max_beta(phis: &[TestFunction]) -> f64 {
    phis.iter().map(TestFunction::beta).fold(0.0, f64::max)
}

/// Richardson extrapolation in `h^2` over a sequence of halving steps.
/// Returns the extrapolated value and the last change, stopping early once
/// the change is below `tol`.
fn romberg<F>(levels: usize, tol: f64, mut level_value: F) -> Result<(f64, f64)>
where
    F: FnMut(usize) -> Result<f64>,
{
    let mut prev_row: Vec<f64> = vec![level_value(0)?];
    let mut change = f64::INFINITY;
    for j in 1..levels {
        let mut row = vec![level_value(j)?];
        let mut factor = 1.0;
        for k in 1..=j {
            factor *= 4.0;
            let r = row[k - 1] + (row[k - 1] - prev_row[k - 1]) / (factor - 1.0);
            row.push(r);
        }
        change = (row[j] - prev_row[j - 1]).abs();
        prev_row = row;
        if change < tol {
            break;
        }
    }
    let best = *prev_row.last().expect("non-empty row");
    if change >= tol {
        return Err(Error::NonConvergence {
            achieved: change,
            tolerance: tol,
            panels: levels,
        });
    }
    Ok((best, change))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_eval(1, 0.0, 0.0), 2.0);
        assert_eq!(kernel_eval(0, 0.37, 0.37), 1.0);
        assert!((kernel_eval(-1, 0.5, 0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn density_examples() {
        assert_eq!(density_w(SymmetryType::U, &[0.8]), 1.0);
        assert_eq!(density_w(SymmetryType::SOeven, &[0.0]), 2.0);
        assert_eq!(density_w(SymmetryType::Sp, &[0.3, 0.3]), 0.0);
        let x = [0.2, 0.9];
        let o = density_w(SymmetryType::O, &x);
        let avg = 0.5 * (density_w(SymmetryType::SOeven, &x) + density_w(SymmetryType::SOodd, &x));
        assert!((o - avg).abs() < 1e-15);
    }

    #[test]
    fn symmetry_tags() {
        let tags: Vec<_> = SymmetryType::ALL.iter().map(|g| (g.epsilon(), g.has_delta())).collect();
        assert_eq!(
            tags,
            vec![(Some(0), false), (Some(1), false), (Some(-1), true), (None, false), (Some(-1), false)]
        );
        for g in SymmetryType::ALL {
            assert_eq!(g.name().parse::<SymmetryType>().unwrap(), g);
        }
    }

    #[test]
    fn romberg_extrapolates_quadratic_errors() {
        let (v, e) = romberg(6, 1e-12, |j| Ok(2.0 + 0.3 * 0.25f64.powi(j as i32) + 0.1 * 0.0625f64.powi(j as i32)))
            .unwrap();
        assert!((v - 2.0).abs() < 1e-13 && e < 1e-12);
        assert!(romberg(3, 1e-12, |j| Ok(0.5f64.powi(j as i32))).is_err());
    }

    proptest! {
        #[test]
        fn determinant_is_permutation_invariant(
            x in proptest::collection::vec(-3.0f64..3.0, 1..6),
            seed in 0u64..1000,
            idx in 0usize..5,
        ) {
            let g = SymmetryType::ALL[idx];
            let mut perm: Vec<usize> = (0..x.len()).collect();
            let mut s = seed;
            for i in (1..perm.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let y: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
            let (a, b) = (density_w(g, &x), density_w(g, &y));
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }
}
