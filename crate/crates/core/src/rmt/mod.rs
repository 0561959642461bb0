//! Haar-random matrices from the classical compact groups and their
//! n-level eigenangle statistics.

mod haar;
mod spectrum;

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{enumerate_partitions, n_level_prediction, PredictionConfig, SymmetryType, TestFunction};
use crate::stream::{mean_stderr, z_score};

pub use haar::{concrete_group, haar_sample, membership_residual, HaarMatrix, MAX_REJECTIONS};
pub use spectrum::{scaled_spectrum, ScaledSpectrum};

/// Matrix ensembles; the size parameter `N` gives `SO(2N)`, `SO(2N+1)`,
/// `USp(2N)`, `U(N)`, and for `O` an even/odd mixture of `SO(2N)` and
/// `SO(2N+1)` over the sample index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    SOeven,
    SOodd,
    USp,
    U,
    O,
}

impl Group {
    pub const ALL: [Group; 5] = [Group::SOeven, Group::SOodd, Group::USp, Group::U, Group::O];

    pub fn symmetry(self) -> SymmetryType {
        match self {
            Group::SOeven => SymmetryType::SOeven,
            Group::SOodd => SymmetryType::SOodd,
            Group::USp => SymmetryType::Sp,
            Group::U => SymmetryType::U,
            Group::O => SymmetryType::O,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Group::SOeven => "SOeven",
            Group::SOodd => "SOodd",
            Group::USp => "USp",
            Group::U => "U",
            Group::O => "O",
        }
    }
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "soeven" | "so_even" | "so-even" => Ok(Group::SOeven),
            "soodd" | "so_odd" | "so-odd" => Ok(Group::SOodd),
            "usp" | "sp" => Ok(Group::USp),
            "u" => Ok(Group::U),
            "o" => Ok(Group::O),
            _ => Err(Error::Domain(format!("unknown group {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub group: Group,
    /// The size parameter `N`.
    pub size: usize,
    pub samples: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(group: Group, size: usize, samples: usize, seed: u64) -> Result<Self> {
        if size < 2 {
            return Err(Error::OutOfRange {
                what: "N",
                value: size as i64,
                range: ">= 2",
            });
        }
        if samples == 0 {
            return Err(Error::OutOfRange {
                what: "samples",
                value: 0,
                range: ">= 1",
            });
        }
        Ok(EnsembleSpec {
            group,
            size,
            samples,
            seed,
        })
    }
}

/// Per-label weights `g_i(label)` of the starred sum: each positive angle
/// stands for the index pair `+-j`, so it carries `phi(x) + phi(-x)`.
fn label_weights(spectrum: &ScaledSpectrum, phis: &[TestFunction], include_zero: bool) -> Vec<Vec<f64>> {
    phis.iter()
        .map(|phi| {
            let mut w: Vec<f64> = spectrum
                .scaled
                .iter()
                .map(|&x| {
                    let v = phi.eval_periodic(x, spectrum.period);
                    if spectrum.self_dual {
                        2.0 * v
                    } else {
                        v
                    }
                })
                .collect();
            if spectrum.forced_zero && include_zero {
                w.push(phi.eval_periodic(0.0, spectrum.period));
            }
            w
        })
        .collect()
}

/// `D^(n)`: the sum of `prod phi_i(x_{j_i})` over index tuples with
/// `j_a != +-j_b`, evaluated by inclusion-exclusion over set partitions of
/// the slots. Test functions are periodized on the spectrum's circle.
pub fn d_n_statistic(spectrum: &ScaledSpectrum, phis: &[TestFunction], include_zero: bool) -> Result<f64> {
    let n = phis.len();
    let weights = label_weights(spectrum, phis, include_zero);
    let labels = weights.first().map_or(0, Vec::len);
    if n == 0 {
        return Ok(1.0);
    }
    if labels < n {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for part in enumerate_partitions(n)? {
        let mut term = part.moebius();
        for block in &part.blocks {
            let s: f64 = (0..labels)
                .map(|l| block.iter().map(|&i| weights[i][l]).product::<f64>())
                .sum();
            term *= s;
        }
        total += term;
    }
    Ok(total)
}

/// One statistic to evaluate on every sample.
#[derive(Debug, Clone)]
pub struct StatRequest {
    pub phis: Vec<TestFunction>,
    pub include_zero: bool,
}

/// Per-request, per-sample statistic values, in sample order. The result
/// does not depend on how rayon schedules the work.
pub fn sample_statistics(spec: &EnsembleSpec, requests: &[StatRequest]) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<Vec<f64>> = (0..spec.samples as u64)
        .into_par_iter()
        .map(|i| {
            let m = haar_sample(spec, i)?;
            let s = scaled_spectrum(&m, concrete_group(spec.group, i), i)?;
            requests
                .iter()
                .map(|r| d_n_statistic(&s, &r.phis, r.include_zero))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok((0..requests.len())
        .map(|k| rows.iter().map(|r| r[k]).collect())
        .collect())
}

/// The kernel prediction matching an ensemble. Without the forced zero,
/// `SO(2N+1)` follows the continuous `Sp` density.
pub fn ensemble_prediction(
    group: Group,
    phis: &[TestFunction],
    include_zero: bool,
    cfg: &PredictionConfig,
) -> Result<(f64, f64)> {
    let one = |g: SymmetryType| n_level_prediction(g, phis, cfg).map(|r| (r.value, r.quadrature_error));
    match (group, include_zero) {
        (Group::SOodd, false) => one(SymmetryType::Sp),
        (Group::O, false) => {
            let (a, ea) = one(SymmetryType::SOeven)?;
            let (b, eb) = one(SymmetryType::Sp)?;
            Ok((0.5 * (a + b), 0.5 * (ea + eb)))
        }
        (g, _) => one(g.symmetry()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub group: Group,
    #[serde(rename = "N")]
    pub size: usize,
    pub samples: usize,
    pub seed: u64,
    pub statistic: String,
    pub n: usize,
    pub beta: f64,
    pub include_zero: bool,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub prediction: f64,
    pub z_score: f64,
}

/// A report together with the per-sample values it summarizes.
#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub report: EnsembleReport,
    pub values: Vec<f64>,
}

/// Evaluates several statistics on one pass over the ensemble.
pub fn ensemble_runs(spec: &EnsembleSpec, requests: &[StatRequest], cfg: &PredictionConfig) -> Result<Vec<EnsembleRun>> {
    let predictions = requests
        .iter()
        .map(|r| ensemble_prediction(spec.group, &r.phis, r.include_zero, cfg))
        .collect::<Result<Vec<_>>>()?;
    let values = sample_statistics(spec, requests)?;
    Ok(requests
        .iter()
        .zip(predictions)
        .zip(values)
        .map(|((r, (prediction, _)), values)| {
            let (mc_mean, mc_stderr) = mean_stderr(&values);
            let report = EnsembleReport {
                group: spec.group,
                size: spec.size,
                samples: spec.samples,
                seed: spec.seed,
                statistic: format!("D{}", r.phis.len()),
                n: r.phis.len(),
                beta: r.phis.iter().map(TestFunction::beta).fold(0.0, f64::max),
                include_zero: r.include_zero,
                mc_mean,
                mc_stderr,
                prediction,
                z_score: z_score(mc_mean, mc_stderr, prediction),
            };
            EnsembleRun { report, values }
        })
        .collect())
}

/// Mean and standard error of `D^(n)` over the ensemble, with the matching
/// kernel prediction.
pub fn ensemble_average(
    spec: &EnsembleSpec,
    phis: &[TestFunction],
    include_zero: bool,
    cfg: &PredictionConfig,
) -> Result<EnsembleReport> {
    let request = StatRequest {
        phis: phis.to_vec(),
        include_zero,
    };
    let mut runs = ensemble_runs(spec, &[request], cfg)?;
    Ok(runs.remove(0).report)
}

/// Per-sample values as CSV with header `index,value`.
pub fn write_samples_csv<W: Write + ?Sized>(values: &[f64], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "index,value")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{i},{v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Enumerates every admissible index tuple explicitly.
    fn brute_force(spectrum: &ScaledSpectrum, phis: &[TestFunction], include_zero: bool) -> f64 {
        let mut points: Vec<(usize, f64)> = Vec::new();
        for (j, &x) in spectrum.scaled.iter().enumerate() {
            points.push((j + 1, x));
            if spectrum.self_dual {
                points.push((j + 1, -x));
            }
        }
        if spectrum.forced_zero && include_zero {
            points.push((0, 0.0));
        }
        fn go(points: &[(usize, f64)], phis: &[TestFunction], period: f64, used: &mut Vec<usize>, acc: f64) -> f64 {
            let slot = used.len();
            if slot == phis.len() {
                return acc;
            }
            let mut total = 0.0;
            for &(label, x) in points {
                if used.contains(&label) {
                    continue;
                }
                used.push(label);
                total += go(points, phis, period, used, acc * phis[slot].eval_periodic(x, period));
                used.pop();
            }
            total
        }
        go(&points, phis, spectrum.period, &mut Vec::new(), 1.0)
    }

    fn fejer(beta: f64) -> TestFunction {
        TestFunction::fejer(beta).unwrap()
    }

    #[test]
    fn one_level_unwinds_to_a_plain_sum() {
        let phi = fejer(0.9);
        let s = ScaledSpectrum::from_scaled(Group::SOodd, vec![0.4, 1.3, 2.2], true, 6.0);
        let direct: f64 = s.scaled.iter().map(|&x| 2.0 * phi.eval_periodic(x, 6.0)).sum::<f64>();
        let with_zero = direct + phi.eval_periodic(0.0, 6.0);
        assert!((d_n_statistic(&s, std::slice::from_ref(&phi), false).unwrap() - direct).abs() < 1e-14);
        assert!((d_n_statistic(&s, std::slice::from_ref(&phi), true).unwrap() - with_zero).abs() < 1e-14);
        let empty = ScaledSpectrum::from_scaled(Group::SOeven, vec![], false, 3.0);
        assert_eq!(d_n_statistic(&empty, &[phi], false).unwrap(), 0.0);
    }

    #[test]
    fn two_level_on_two_angles() {
        let phi = fejer(0.45);
        let s = ScaledSpectrum::from_scaled(Group::SOeven, vec![0.3, 0.8], false, 3.0);
        let fast = d_n_statistic(&s, &[phi.clone(), phi.clone()], false).unwrap();
        let slow = brute_force(&s, &[phi.clone(), phi], false);
        assert!((fast - slow).abs() <= 1e-12 * slow.abs().max(1.0), "{fast} vs {slow}");
    }

    proptest! {
        #[test]
        fn optimized_statistic_matches_enumeration(
            xs in proptest::collection::vec(0.0f64..4.0, 0..5),
            n in 1usize..4,
            forced in any::<bool>(),
            include in any::<bool>(),
            unitary in any::<bool>(),
        ) {
            let group = if unitary { Group::U } else { Group::SOodd };
            let period = 9.0;
            let s = ScaledSpectrum::from_scaled(group, xs, forced && !unitary, period);
            let phis: Vec<TestFunction> = (0..n).map(|i| fejer(0.3 + 0.1 * i as f64)).collect();
            let fast = d_n_statistic(&s, &phis, include).unwrap();
            let slow = brute_force(&s, &phis, include);
            prop_assert!((fast - slow).abs() <= 1e-12 * slow.abs().max(1.0), "{} vs {}", fast, slow);
        }
    }

    #[test]
    fn reports_are_reproducible_across_thread_counts() {
        let spec = EnsembleSpec::new(Group::O, 6, 64, 77).unwrap();
        let phi = fejer(0.9);
        let cfg = PredictionConfig::default();
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = serial.install(|| ensemble_average(&spec, std::slice::from_ref(&phi), true, &cfg).unwrap());
        let b = wide.install(|| ensemble_average(&spec, std::slice::from_ref(&phi), true, &cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.mc_mean.to_bits(), b.mc_mean.to_bits());
    }

    #[test]
    fn small_ensembles_track_the_one_level_predictions() {
        let phi = fejer(0.9);
        let cfg = PredictionConfig::default();
        for group in Group::ALL {
            let spec = EnsembleSpec::new(group, 10, 3000, 5).unwrap();
            let r = ensemble_average(&spec, std::slice::from_ref(&phi), true, &cfg).unwrap();
            assert!(r.z_score.abs() < 4.0, "{group}: {r:?}");
        }
    }

    #[test]
    fn report_json_fields() {
        let spec = EnsembleSpec::new(Group::SOeven, 4, 8, 1).unwrap();
        let r = ensemble_average(&spec, &[fejer(0.9)], false, &PredictionConfig::default()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["group", "N", "samples", "seed", "n", "beta", "mc_mean", "mc_stderr", "prediction", "z_score"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["group"], "SOeven");
        assert_eq!(v["N"], 4);
    }
}
