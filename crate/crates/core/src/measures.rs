//! Vertical Sato-Tate measures `mu_p` on pairs of normalized Hecke
//! eigenvalues, and their `p -> infinity` limit.
//!
//! Everything lives on the full square `[-2, 2]^2` with a density that is
//! symmetric under `(x, y) -> (y, x)`; functions on the quotient are lifted to
//! symmetric functions. The printed density is divided by its full-square
//! mass, computed once per measure, so every measure here is a probability
//! measure on the square.
//!
//! Quadrature runs in angle coordinates `x = 2 cos s`, `y = 2 cos t`. The
//! square-root factors become `sin s`, `sin t` and the integrands are analytic
//! on `[0, pi]^2`, which is where the adaptive Gauss-Legendre panels converge
//! quickly.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::Prime;
use crate::error::{Error, Result};
use crate::quadrature::{Cubature, Integral, Rect};
use crate::sign::Sign;
use crate::stream::{self, mean_stderr};

/// Default absolute tolerance for [`integrate`].
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// A pair `(a, b)` of normalized Hecke eigenvalues at a prime; unordered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatakePoint {
    a: f64,
    b: f64,
}

impl SatakePoint {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        check_coordinate(a)?;
        check_coordinate(b)?;
        Ok(SatakePoint { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn swapped(&self) -> Self {
        SatakePoint { a: self.b, b: self.a }
    }
}

fn check_coordinate(v: f64) -> Result<()> {
    if (-2.0..=2.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain(format!("coordinate {v} outside [-2, 2]")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureKind {
    MuP(Prime),
    SatoTateInfinity,
}

/// A measure together with the full-square mass of its printed density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub normalization: f64,
}

impl MeasureSpec {
    /// `mu_p`, normalized by quadrature.
    pub fn mu_p(p: u64) -> Result<Self> {
        Self::normalized(MeasureKind::MuP(Prime::new(p)?))
    }

    /// The limiting measure `mu_infinity^ST`, normalized by quadrature.
    pub fn sato_tate() -> Result<Self> {
        Self::normalized(MeasureKind::SatoTateInfinity)
    }

    fn normalized(kind: MeasureKind) -> Result<Self> {
        let raw = MeasureSpec {
            kind,
            normalization: 1.0,
        };
        let cub = Cubature::new(16, 1e-14, 40_000);
        let mass = raw.integrate_angles(&|_, _| 1.0, full_angles(), &cub)?;
        if mass.value <= 0.0 || !mass.value.is_finite() {
            return Err(Error::Domain(format!("non-positive total mass {}", mass.value)));
        }
        Ok(MeasureSpec {
            kind,
            normalization: mass.value,
        })
    }

    pub fn prime(&self) -> Option<Prime> {
        match self.kind {
            MeasureKind::MuP(p) => Some(p),
            MeasureKind::SatoTateInfinity => None,
        }
    }

    /// Printed (unnormalized) density in terms of the coordinates and their
    /// boundary factors `rx = sqrt(1 - x^2/4)`, `ry = sqrt(1 - y^2/4)`.
    fn raw(&self, x: f64, y: f64, rx: f64, ry: f64) -> Result<f64> {
        let st = st_parts(x, y, rx, ry);
        match self.kind {
            MeasureKind::SatoTateInfinity => Ok(st),
            MeasureKind::MuP(p) => {
                let f = f_parts(p, x, y)?;
                let gp = g_parts(p, x, y, rx, ry, Sign::Plus)?;
                let gm = g_parts(p, x, y, rx, ry, Sign::Minus)?;
                Ok(f * gp * gm * st)
            }
        }
    }

    /// `integral f(s, t) * raw density * jacobian ds dt` over an angle box.
    fn integrate_angles<F>(&self, f: &F, region: Rect, cub: &Cubature) -> Result<Integral>
    where
        F: Fn(f64, f64) -> f64,
    {
        let failure: std::cell::RefCell<Option<Error>> = std::cell::RefCell::new(None);
        let out = cub.integrate_2d(
            |s, t| {
                let (x, y) = (2.0 * s.cos(), 2.0 * t.cos());
                let (rx, ry) = (s.sin().abs(), t.sin().abs());
                match self.raw(x, y, rx, ry) {
                    Ok(d) => f(x, y) * d * 4.0 * rx * ry,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    }
                }
            },
            region,
        )?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(out)
    }
}

fn full_angles() -> Rect {
    Rect::new(0.0, PI, 0.0, PI)
}

fn boundary_factor(v: f64) -> f64 {
    (1.0 - 0.25 * v * v).max(0.0).sqrt()
}

/// `(sqrt(p) + 1/sqrt(p))^2 = p + 2 + 1/p`.
fn shifted_square(p: Prime) -> f64 {
    let p = p.as_f64();
    p + 2.0 + 1.0 / p
}

fn f_parts(p: Prime, x: f64, y: f64) -> Result<f64> {
    let s = shifted_square(p);
    let den = (s - x * x) * (s - y * y);
    if den <= 0.0 {
        return Err(Error::Domain(format!("f_p denominator {den} <= 0 at p={p}, x={x}, y={y}")));
    }
    let q = p.as_f64() + 1.0;
    Ok(q * q / den)
}

fn g_parts(p: Prime, x: f64, y: f64, rx: f64, ry: f64, sign: Sign) -> Result<f64> {
    let s = shifted_square(p);
    let den = s - 2.0 * (1.0 + x * y / 4.0 + sign.as_f64() * rx * ry);
    if den <= 0.0 {
        return Err(Error::Domain(format!(
            "g_p denominator {den} <= 0 at p={p}, x={x}, y={y}, sign={}",
            sign.value()
        )));
    }
    Ok((p.as_f64() + 1.0) / den)
}

fn st_parts(x: f64, y: f64, rx: f64, ry: f64) -> f64 {
    let d = x - y;
    d * d / (PI * PI) * rx * ry
}

/// `f_p(x, y)`.
pub fn density_f(p: Prime, x: f64, y: f64) -> Result<f64> {
    f_parts(p, x, y)
}

/// `g_p^{+}` or `g_p^{-}` according to `sign`.
pub fn density_g(p: Prime, x: f64, y: f64, sign: Sign) -> Result<f64> {
    check_coordinate(x)?;
    check_coordinate(y)?;
    g_parts(p, x, y, boundary_factor(x), boundary_factor(y), sign)
}

/// The printed density of `mu_infinity^ST` (full-square mass 2).
pub fn density_st_inf(x: f64, y: f64) -> Result<f64> {
    check_coordinate(x)?;
    check_coordinate(y)?;
    Ok(st_parts(x, y, boundary_factor(x), boundary_factor(y)))
}

/// The normalized density of `spec` at `(x, y)`.
pub fn density_mu_p(spec: &MeasureSpec, x: f64, y: f64) -> Result<f64> {
    check_coordinate(x)?;
    check_coordinate(y)?;
    Ok(spec.raw(x, y, boundary_factor(x), boundary_factor(y))? / spec.normalization)
}

/// `integral integrand(x, y) d mu` over the square at [`DEFAULT_TOLERANCE`].
pub fn integrate<F: Fn(f64, f64) -> f64>(spec: &MeasureSpec, integrand: F) -> Result<Integral> {
    integrate_with(spec, integrand, &Cubature::default().with_tolerance(DEFAULT_TOLERANCE))
}

pub fn integrate_with<F: Fn(f64, f64) -> f64>(
    spec: &MeasureSpec,
    integrand: F,
    cub: &Cubature,
) -> Result<Integral> {
    integrate_region(spec, Rect::new(-2.0, 2.0, -2.0, 2.0), integrand, cub)
}

/// Integral over a sub-rectangle of the square, in `(x, y)` coordinates.
pub fn integrate_region<F: Fn(f64, f64) -> f64>(
    spec: &MeasureSpec,
    region: Rect,
    integrand: F,
    cub: &Cubature,
) -> Result<Integral> {
    for v in [region.x0, region.x1, region.y0, region.y1] {
        check_coordinate(v)?;
    }
    // The angle map is decreasing, so the x-interval [x0, x1] becomes
    // [acos(x1/2), acos(x0/2)].
    let angles = Rect::new(
        (region.x1 / 2.0).acos(),
        (region.x0 / 2.0).acos(),
        (region.y1 / 2.0).acos(),
        (region.y0 / 2.0).acos(),
    );
    let scaled = cub.clone().with_tolerance(cub.tolerance * spec.normalization);
    let raw = spec.integrate_angles(&integrand, angles, &scaled)?;
    Ok(Integral {
        value: raw.value / spec.normalization,
        error: raw.error / spec.normalization,
        panels: raw.panels,
    })
}

/// Rejection sampler with a uniform envelope on the square.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: MeasureSpec,
    bound: f64,
}

const ENVELOPE_GRID: usize = 401;
const ENVELOPE_SAFETY: f64 = 1.05;
const MAX_PROPOSALS: usize = 1_000_000;

impl Sampler {
    /// Caches the density supremum from a dense grid scan.
    pub fn new(spec: MeasureSpec) -> Result<Self> {
        let step = 4.0 / (ENVELOPE_GRID - 1) as f64;
        let mut sup: f64 = 0.0;
        for i in 0..ENVELOPE_GRID {
            let x = -2.0 + step * i as f64;
            for j in 0..ENVELOPE_GRID {
                let y = -2.0 + step * j as f64;
                sup = sup.max(density_mu_p(&spec, x, y)?);
            }
        }
        Ok(Sampler {
            spec,
            bound: sup * ENVELOPE_SAFETY,
        })
    }

    pub fn spec(&self) -> &MeasureSpec {
        &self.spec
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    fn domain(&self) -> u64 {
        stream::domain::MEASURE ^ self.spec.prime().map_or(0, |p| p.get())
    }

    /// Draw number `index` of the stream selected by `seed`.
    pub fn draw(&self, seed: u64, index: u64) -> Result<SatakePoint> {
        let mut rng = stream::substream(seed, self.domain(), index);
        for _ in 0..MAX_PROPOSALS {
            let x = rng.random_range(-2.0..=2.0);
            let y = rng.random_range(-2.0..=2.0);
            let u = rng.random::<f64>() * self.bound;
            let d = density_mu_p(&self.spec, x, y)?;
            if d > self.bound {
                return Err(Error::EnvelopeViolation {
                    x,
                    y,
                    density: d,
                    bound: self.bound,
                });
            }
            if u < d {
                return SatakePoint::new(x, y);
            }
        }
        Err(Error::Sampling {
            index,
            reason: format!("no acceptance in {MAX_PROPOSALS} proposals"),
        })
    }

    /// Draws `0..count`; the result does not depend on the thread count.
    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<SatakePoint>> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| self.draw(seed, i))
            .collect()
    }
}

/// `count` i.i.d. draws from `spec`.
pub fn sample(spec: &MeasureSpec, seed: u64, count: usize) -> Result<Vec<SatakePoint>> {
    if count == 0 {
        return Err(Error::OutOfRange {
            what: "count",
            value: 0,
            range: ">= 1",
        });
    }
    Sampler::new(*spec)?.sample(seed, count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub i: u32,
    pub j: u32,
    pub quadrature: f64,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    /// `None` for the limiting measure.
    pub p: Option<u64>,
    pub moments: Vec<MomentRow>,
    pub normalization: f64,
}

/// Mixed moments `E[x^i y^j]` for `i, j <= max_power`, by quadrature and by
/// Monte Carlo from `samples` draws.
pub fn moment_report(spec: &MeasureSpec, max_power: u32, seed: u64, samples: usize) -> Result<MomentReport> {
    let draws = sample(spec, seed, samples)?;
    let mut moments = Vec::new();
    for i in 0..=max_power {
        for j in 0..=max_power {
            let q = integrate(spec, |x, y| x.powi(i as i32) * y.powi(j as i32))?;
            let vals: Vec<f64> = draws
                .iter()
                .map(|s| s.a().powi(i as i32) * s.b().powi(j as i32))
                .collect();
            let (m, se) = mean_stderr(&vals);
            moments.push(MomentRow {
                i,
                j,
                quadrature: q.value,
                mc_estimate: m,
                mc_stderr: se,
            });
        }
    }
    Ok(MomentReport {
        p: spec.prime().map(Prime::get),
        moments,
        normalization: spec.normalization,
    })
}

/// Writes the normalized density on a `points x points` grid as CSV,
/// row-major in `x`, with header `x,y,density`.
pub fn write_density_csv<W: Write + ?Sized>(spec: &MeasureSpec, points: usize, out: &mut W) -> Result<()> {
    if points < 2 {
        return Err(Error::OutOfRange {
            what: "grid",
            value: points as i64,
            range: ">= 2",
        });
    }
    let io = |e: std::io::Error| Error::Domain(format!("write failed: {e}"));
    writeln!(out, "x,y,density").map_err(io)?;
    let step = 4.0 / (points - 1) as f64;
    for i in 0..points {
        let x = -2.0 + step * i as f64;
        for j in 0..points {
            let y = -2.0 + step * j as f64;
            writeln!(out, "{x},{y},{}", density_mu_p(spec, x, y)?).map_err(io)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    #[test]
    fn f_examples() {
        assert!((density_f(p(2), 0.0, 0.0).unwrap() - 9.0 / 20.25).abs() < 1e-15);
        assert!((density_f(p(2), 1.0, 0.0).unwrap() - 9.0 / (3.5 * 4.5)).abs() < 1e-15);
    }

    #[test]
    fn g_examples() {
        assert!((density_g(p(2), 0.0, 0.0, Sign::Plus).unwrap() - 6.0).abs() < 1e-14);
        assert!((density_g(p(2), 0.0, 0.0, Sign::Minus).unwrap() - 3.0 / 4.5).abs() < 1e-15);
        assert!((density_g(p(2), 2.0, 2.0, Sign::Plus).unwrap() - 6.0).abs() < 1e-14);
        assert!(density_g(p(2), 2.5, 0.0, Sign::Plus).is_err());
    }

    #[test]
    fn st_examples_and_zeros() {
        assert_eq!(density_st_inf(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(density_st_inf(2.0, 0.0).unwrap(), 0.0);
        assert!((density_st_inf(1.0, -1.0).unwrap() - 3.0 / (PI * PI)).abs() < 1e-15);
        let mu = MeasureSpec::mu_p(2).unwrap();
        for v in [-2.0, -0.7, 0.0, 1.3, 2.0] {
            assert_eq!(density_mu_p(&mu, v, v).unwrap(), 0.0);
            assert_eq!(density_mu_p(&mu, 2.0, v).unwrap(), 0.0);
            assert_eq!(density_mu_p(&mu, v, -2.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn mu_p_is_the_factor_product() {
        let mu = MeasureSpec::mu_p(2).unwrap();
        let (x, y) = (1.0, -1.0);
        let product = density_f(p(2), x, y).unwrap()
            * density_g(p(2), x, y, Sign::Plus).unwrap()
            * density_g(p(2), x, y, Sign::Minus).unwrap()
            * density_st_inf(x, y).unwrap()
            / mu.normalization;
        let got = density_mu_p(&mu, x, y).unwrap();
        assert!(got > 0.0);
        assert!((got - product).abs() < 1e-15 * product);
    }

    #[test]
    fn full_square_masses() {
        // The printed limit density has mass 1 on the half square.
        let st = MeasureSpec::sato_tate().unwrap();
        assert!((st.normalization - 2.0).abs() < 1e-12);
        // Regression values for mu_p: the masses follow 2(p+1)^2/(p^2+1).
        for q in [2u64, 3, 5, 11, 101] {
            let mu = MeasureSpec::mu_p(q).unwrap();
            let pf = q as f64;
            let expected = 2.0 * (pf + 1.0).powi(2) / (pf * pf + 1.0);
            assert!((mu.normalization - expected).abs() < 1e-11, "p={q}");
        }
    }

    #[test]
    fn normalization_and_odd_moments() {
        for q in [2u64, 3, 5] {
            let mu = MeasureSpec::mu_p(q).unwrap();
            assert!((integrate(&mu, |_, _| 1.0).unwrap().value - 1.0).abs() < 1e-8);
            assert!(integrate(&mu, |x, y| x + y).unwrap().value.abs() < 1e-6);
        }
    }

    #[test]
    fn large_p_approaches_the_limit_density() {
        let mu = MeasureSpec::mu_p(1_000_003).unwrap();
        let st = MeasureSpec::sato_tate().unwrap();
        let n = 50;
        for i in 0..n {
            for j in 0..n {
                let x = -2.0 + 4.0 * i as f64 / (n - 1) as f64;
                let y = -2.0 + 4.0 * j as f64 / (n - 1) as f64;
                let a = density_mu_p(&mu, x, y).unwrap();
                let b = density_mu_p(&st, x, y).unwrap();
                assert!((a - b).abs() < 1e-2, "({x}, {y}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn moments_converge_monotonically_to_the_limit() {
        let st = MeasureSpec::sato_tate().unwrap();
        let primes = [2u64, 11, 101, 10007];
        let specs: Vec<MeasureSpec> = primes.iter().map(|&q| MeasureSpec::mu_p(q).unwrap()).collect();
        for i in 0..=2 {
            for j in 0..=2 {
                let f = |x: f64, y: f64| x.powi(i) * y.powi(j);
                let target = integrate(&st, f).unwrap().value;
                let diffs: Vec<f64> = specs
                    .iter()
                    .map(|s| (integrate(s, f).unwrap().value - target).abs())
                    .collect();
                for w in diffs.windows(2) {
                    assert!(w[1] <= w[0] + 1e-9, "(i,j)=({i},{j}): {diffs:?}");
                }
            }
        }
    }

    #[test]
    fn region_integrals_add_up() {
        let mu = MeasureSpec::mu_p(3).unwrap();
        let cub = Cubature::default();
        let left = integrate_region(&mu, Rect::new(-2.0, 0.3, -2.0, 2.0), |_, _| 1.0, &cub).unwrap();
        let right = integrate_region(&mu, Rect::new(0.3, 2.0, -2.0, 2.0), |_, _| 1.0, &cub).unwrap();
        assert!((left.value + right.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn limit_measure_quadrature_matches_monte_carlo() {
        let st = MeasureSpec::sato_tate().unwrap();
        let q = integrate(&st, |x, y| (x - y).powi(2)).unwrap().value;
        let draws = sample(&st, 11, 100_000).unwrap();
        let vals: Vec<f64> = draws.iter().map(|s| (s.a() - s.b()).powi(2)).collect();
        let (m, se) = mean_stderr(&vals);
        assert!(q > 0.0);
        assert!((m - q).abs() < 3.0 * se + 1e-8, "{m} +- {se} vs {q}");
    }

    #[test]
    fn sampler_mean_and_support() {
        let mu = MeasureSpec::mu_p(2).unwrap();
        let draws = sample(&mu, 5, 100_000).unwrap();
        assert!(draws.iter().all(|s| s.a().abs() <= 2.0 && s.b().abs() <= 2.0));
        let vals: Vec<f64> = draws.iter().map(|s| s.a() + s.b()).collect();
        let (m, se) = mean_stderr(&vals);
        assert!(m.abs() < 3.0 * se, "{m} +- {se}");
    }

    #[test]
    fn sampler_passes_chi_square_on_marginal_cells() {
        // 0.99 quantile of chi-square with 9 degrees of freedom.
        const CRITICAL: f64 = 21.666;
        let mu = MeasureSpec::mu_p(3).unwrap();
        let n = 50_000usize;
        let draws = sample(&mu, 17, n).unwrap();
        let cub = Cubature::default();
        let mut chi2 = 0.0;
        for k in 0..10 {
            let (lo, hi) = (-2.0 + 0.4 * k as f64, -2.0 + 0.4 * (k + 1) as f64);
            let prob = integrate_region(&mu, Rect::new(lo, hi, -2.0, 2.0), |_, _| 1.0, &cub)
                .unwrap()
                .value;
            let observed = draws
                .iter()
                .filter(|s| s.a() >= lo && (s.a() < hi || (k == 9 && s.a() <= hi)))
                .count() as f64;
            let expected = prob * n as f64;
            chi2 += (observed - expected).powi(2) / expected;
        }
        assert!(chi2 < CRITICAL, "chi2 = {chi2}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let mu = MeasureSpec::mu_p(5).unwrap();
        let s = Sampler::new(mu).unwrap();
        let a = s.sample(9, 64).unwrap();
        let b: Vec<SatakePoint> = (0..64).rev().map(|i| s.draw(9, i).unwrap()).rev().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn stale_envelope_is_reported() {
        let mu = MeasureSpec::mu_p(2).unwrap();
        let mut s = Sampler::new(mu).unwrap();
        s.bound = 1e-6;
        let err = s.draw(1, 0).unwrap_err();
        assert!(matches!(err, Error::EnvelopeViolation { .. }));
    }

    #[test]
    fn density_csv_layout() {
        let mu = MeasureSpec::mu_p(2).unwrap();
        let mut buf = Vec::new();
        write_density_csv(&mu, 5, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,density");
        assert_eq!(lines.len(), 26);
    }

    #[test]
    fn rejects_non_primes_and_outside_points() {
        assert_eq!(MeasureSpec::mu_p(1_000_000).unwrap_err(), Error::NotPrime(1_000_000));
        assert!(SatakePoint::new(2.1, 0.0).is_err());
        let mu = MeasureSpec::mu_p(2).unwrap();
        assert!(density_mu_p(&mu, 0.0, -2.01).is_err());
    }

    proptest! {
        #[test]
        fn density_is_symmetric(x in -2.0f64..=2.0, y in -2.0f64..=2.0, idx in 0usize..5) {
            let q = [2u64, 3, 5, 11, 101][idx];
            let spec = MeasureSpec { kind: MeasureKind::MuP(p(q)), normalization: 1.0 };
            let a = density_mu_p(&spec, x, y).unwrap();
            let b = density_mu_p(&spec, y, x).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
            let fa = density_f(p(q), x, y).unwrap();
            prop_assert_eq!(fa, density_f(p(q), y, x).unwrap());
        }
    }
}
