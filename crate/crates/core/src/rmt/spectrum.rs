use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::haar::HaarMatrix;
use super::Group;
use crate::error::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-9;
const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 10_000;

/// Eigenangles of one sample, scaled to unit mean spacing.
///
/// For self-dual groups `angles` holds one representative in `[0, pi]` of
/// each conjugate pair, excluding a forced eigenvalue `1`; for `U(N)` it holds
/// all `N` angles in `[0, 2 pi)`. The scale factor is the exact mean density
/// `L / (2 pi)` of eigenangles on the circle, where `L` counts the eigenvalues
/// that are not forced: `2N - 1` for `SO(2N)`, `2N` for `SO(2N+1)`, `2N + 1`
/// for `USp(2N)` and `N` for `U(N)`. On the scaled axis, angles live on a
/// circle of circumference `period = L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledSpectrum {
    pub group: Group,
    pub angles: Vec<f64>,
    pub scaled: Vec<f64>,
    pub forced_zero: bool,
    pub period: f64,
    pub self_dual: bool,
}

impl ScaledSpectrum {
    /// A spectrum given directly by its scaled positions, mainly for tests.
    pub fn from_scaled(group: Group, scaled: Vec<f64>, forced_zero: bool, period: f64) -> Self {
        let factor = period / (2.0 * PI);
        ScaledSpectrum {
            group,
            angles: scaled.iter().map(|x| x / factor).collect(),
            scaled,
            forced_zero,
            period,
            self_dual: group != Group::U,
        }
    }

    /// Mean gap between consecutive scaled angles in the middle half of the
    /// spectrum.
    pub fn bulk_spacing(&self) -> f64 {
        let k = self.scaled.len();
        let (lo, hi) = (k / 4, (3 * k) / 4);
        if hi <= lo {
            return f64::NAN;
        }
        (self.scaled[hi] - self.scaled[lo]) / (hi - lo) as f64
    }
}

fn eigenvalues(m: &HaarMatrix, index: u64) -> Result<Vec<Complex64>> {
    let eig: Vec<Complex64> = match m {
        HaarMatrix::Real(q) => Schur::try_new(q.clone(), SCHUR_EPS, SCHUR_MAX_ITER)
            .ok_or(Error::Eigen { index })?
            .complex_eigenvalues()
            .iter()
            .copied()
            .collect(),
        HaarMatrix::Complex(u) => {
            let (_, t): (DMatrix<Complex64>, DMatrix<Complex64>) =
                Schur::try_new(u.clone(), SCHUR_EPS, SCHUR_MAX_ITER)
                    .ok_or(Error::Eigen { index })?
                    .unpack();
            t.diagonal().iter().copied().collect()
        }
    };
    if eig.iter().any(|z| (z.norm() - 1.0).abs() > UNIT_TOLERANCE) {
        return Err(Error::Eigen { index });
    }
    Ok(eig)
}

/// Pairs conjugate angles: sorted `|arg|` values appear twice.
fn fold_pairs(mut abs_args: Vec<f64>) -> Vec<f64> {
    abs_args.sort_by(f64::total_cmp);
    abs_args.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect()
}

/// Scaled spectrum of a sample of `group` (an already resolved concrete
/// group, not `O`). `index` is used only in error reports.
pub fn scaled_spectrum(m: &HaarMatrix, group: Group, index: u64) -> Result<ScaledSpectrum> {
    let eig = eigenvalues(m, index)?;
    let d = eig.len();
    let (angles, forced_zero, count) = match group {
        Group::U => {
            let mut a: Vec<f64> = eig.iter().map(|z| z.arg().rem_euclid(2.0 * PI)).collect();
            a.sort_by(f64::total_cmp);
            (a, false, d)
        }
        Group::SOeven => (fold_pairs(eig.iter().map(|z| z.arg().abs()).collect()), false, d - 1),
        Group::USp => (fold_pairs(eig.iter().map(|z| z.arg().abs()).collect()), false, d + 1),
        Group::SOodd => {
            let mut args: Vec<f64> = eig.iter().map(|z| z.arg().abs()).collect();
            args.sort_by(f64::total_cmp);
            if args[0] > UNIT_TOLERANCE.sqrt() {
                return Err(Error::Sampling {
                    index,
                    reason: format!("no eigenvalue at 1 (smallest angle {})", args[0]),
                });
            }
            (fold_pairs(args[1..].to_vec()), true, d - 1)
        }
        Group::O => {
            return Err(Error::Domain("resolve the O ensemble to SOeven or SOodd per sample".into()));
        }
    };
    let period = count as f64;
    let factor = period / (2.0 * PI);
    Ok(ScaledSpectrum {
        group,
        scaled: angles.iter().map(|a| a * factor).collect(),
        angles,
        forced_zero,
        period,
        self_dual: group != Group::U,
    })
}
