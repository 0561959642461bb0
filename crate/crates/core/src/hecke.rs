//! Local Euler factors of the degree-4 spinor and degree-5 standard
//! L-functions, their Dirichlet and log-derivative coefficients, and the
//! conductor and root-number bookkeeping attached to a weight.
//!
//! All coefficients are computed in real arithmetic from `a = 2 cos(theta1)`
//! and `b = 2 cos(theta2)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::arith::{factorize, Prime};
use crate::error::{Error, Result};
use crate::measures::SatakePoint;
use crate::sign::Sign;

/// Default truncation depth for coefficient tables.
pub const DEFAULT_N_MAX: usize = 20;

const ROOT_TOLERANCE: f64 = 1e-9;

/// Spinor Satake angles: the parameters are `e^{+-i theta1}, e^{+-i theta2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinSatake {
    theta1: f64,
    theta2: f64,
}

impl SpinSatake {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        for t in [theta1, theta2] {
            if !(0.0..=PI).contains(&t) {
                return Err(Error::Domain(format!("Satake angle {t} outside [0, pi]")));
            }
        }
        Ok(SpinSatake { theta1, theta2 })
    }

    pub fn from_point(point: SatakePoint) -> Self {
        SpinSatake {
            theta1: (point.a() / 2.0).clamp(-1.0, 1.0).acos(),
            theta2: (point.b() / 2.0).clamp(-1.0, 1.0).acos(),
        }
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn a(&self) -> f64 {
        2.0 * self.theta1.cos()
    }

    pub fn b(&self) -> f64 {
        2.0 * self.theta2.cos()
    }

    pub fn point(&self) -> SatakePoint {
        SatakePoint::new(self.a().clamp(-2.0, 2.0), self.b().clamp(-2.0, 2.0))
            .expect("clamped into the square")
    }
}

/// Which L-function a coefficient belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LKind {
    Spin,
    #[serde(rename = "std")]
    Standard,
}

impl std::str::FromStr for LKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spin" => Ok(LKind::Spin),
            "std" | "standard" => Ok(LKind::Standard),
            other => Err(Error::Domain(format!("unknown L-function kind {other:?}"))),
        }
    }
}

/// `Q(t) = 1 + c_1 t + ... + c_d t^d` with all roots on the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerFactor {
    coeffs: Vec<f64>,
}

impl EulerFactor {
    /// Validates a degree 4 or 5 factor. `coeffs[0]` must be 1.
    ///
    /// A palindromic quartic `t^2 R(t + 1/t)` has unit roots iff the
    /// quadratic `R` has real roots in `[-2, 2]`; an anti-palindromic quintic
    /// is first divided by `1 - t`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let degree = coeffs.len().saturating_sub(1);
        if !(degree == 4 || degree == 5) {
            return Err(Error::Domain(format!("Euler factor degree {degree} is not 4 or 5")));
        }
        if (coeffs[0] - 1.0).abs() > ROOT_TOLERANCE {
            return Err(Error::Domain(format!("constant term {} is not 1", coeffs[0])));
        }
        let quartic = if degree == 5 {
            let q = deflate_unit_root(&coeffs)?;
            vec![q[0], q[1], q[2], q[3], q[4]]
        } else {
            coeffs.clone()
        };
        check_unit_quartic(&quartic)?;
        Ok(EulerFactor { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficients of `1 / Q(t)` up to `t^n_max`.
    pub fn inverse_series(&self, n_max: usize) -> Vec<f64> {
        let c = &self.coeffs;
        let mut out = vec![0.0; n_max + 1];
        out[0] = 1.0;
        for n in 1..=n_max {
            let mut acc = 0.0;
            for i in 1..=n.min(self.degree()) {
                acc += c[i] * out[n - i];
            }
            out[n] = -acc;
        }
        out
    }
}

fn deflate_unit_root(coeffs: &[f64]) -> Result<Vec<f64>> {
    let tol = ROOT_TOLERANCE * (1.0 + coeffs.iter().map(|c| c.abs()).sum::<f64>());
    let at_one: f64 = coeffs.iter().sum();
    if at_one.abs() > tol {
        return Err(Error::Domain(format!("quintic factor has no root at t = 1 (Q(1) = {at_one})")));
    }
    // Q(t) = (1 - t) P(t): p_k = sum_{i <= k} c_i.
    let mut p = Vec::with_capacity(coeffs.len() - 1);
    let mut acc = 0.0;
    for &c in &coeffs[..coeffs.len() - 1] {
        acc += c;
        p.push(acc);
    }
    Ok(p)
}

fn check_unit_quartic(c: &[f64]) -> Result<()> {
    let tol = ROOT_TOLERANCE * (1.0 + c.iter().map(|v| v.abs()).sum::<f64>());
    if (c[4] - c[0]).abs() > tol || (c[3] - c[1]).abs() > tol {
        return Err(Error::Domain(format!("quartic factor {c:?} is not palindromic")));
    }
    // t^{-2} Q = (z^2 - 2) + c1 z + c2 with z = t + 1/t, i.e. z^2 + c1 z + (c2 - 2).
    let disc = c[1] * c[1] - 4.0 * (c[2] - 2.0);
    if disc < -tol {
        return Err(Error::Domain(format!("quartic factor {c:?} has roots off the unit circle")));
    }
    let r = disc.max(0.0).sqrt();
    for z in [(-c[1] + r) / 2.0, (-c[1] - r) / 2.0] {
        if z.abs() > 2.0 + tol {
            return Err(Error::Domain(format!("quartic factor {c:?} has roots off the unit circle")));
        }
    }
    Ok(())
}

/// `(1 - a t + t^2)(1 - b t + t^2)`.
pub fn spin_euler_factor(s: SpinSatake) -> EulerFactor {
    let (a, b) = (s.a(), s.b());
    EulerFactor {
        coeffs: vec![1.0, -(a + b), 2.0 + a * b, -(a + b), 1.0],
    }
}

/// `(1 - t)` times the quartic with parameters `e^{+-i(theta1 +- theta2)}`.
pub fn std_euler_factor(s: SpinSatake) -> EulerFactor {
    let (a, b) = (s.a(), s.b());
    let q = [1.0, -a * b, a * a + b * b - 2.0, -a * b, 1.0];
    let mut coeffs = vec![0.0; 6];
    for (i, &v) in q.iter().enumerate() {
        coeffs[i] += v;
        coeffs[i + 1] -= v;
    }
    EulerFactor { coeffs }
}

pub fn euler_factor(s: SpinSatake, which: LKind) -> EulerFactor {
    match which {
        LKind::Spin => spin_euler_factor(s),
        LKind::Standard => std_euler_factor(s),
    }
}

/// `lambda~(p^n)`, the complete homogeneous symmetric polynomial `h_n` of the
/// spinor parameters.
pub fn spin_dirichlet_coeff(s: SpinSatake, n: usize) -> f64 {
    spin_euler_factor(s).inverse_series(n)[n]
}

/// `mu(p^n)` for the standard L-function.
pub fn std_dirichlet_coeff(s: SpinSatake, n: usize) -> f64 {
    std_euler_factor(s).inverse_series(n)[n]
}

pub fn dirichlet_coeff(s: SpinSatake, n: usize, which: LKind) -> f64 {
    euler_factor(s, which).inverse_series(n)[n]
}

/// Power sums `sum alpha^k`, `k = 1..=k_max`, of the inverse roots, by
/// Newton's identities.
pub fn logderiv_coeffs(factor: &EulerFactor, k_max: usize) -> Vec<f64> {
    let c = factor.coeffs();
    let d = factor.degree();
    let coef = |i: usize| if i <= d { c[i] } else { 0.0 };
    let mut p = vec![0.0; k_max + 1];
    for k in 1..=k_max {
        let mut acc = -(k as f64) * coef(k);
        for i in 1..k.min(d + 1) {
            acc -= c[i] * p[k - i];
        }
        p[k] = acc;
    }
    p.remove(0);
    p
}

/// Spinor coefficient data at one prime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffTable {
    pub p: Prime,
    pub n_max: usize,
    /// `lambda~(p^n)`, `n = 0..=n_max`.
    pub dirichlet: Vec<f64>,
    /// `lambda'(p^n)`, `n = 0..=n_max`; empty until filled.
    pub hecke: Vec<f64>,
    /// `a(p^k)`, `k = 1..=n_max`.
    pub logderiv: Vec<f64>,
}

impl CoeffTable {
    /// Fully populated spinor table.
    pub fn spin(p: Prime, s: SpinSatake, n_max: usize) -> Self {
        let factor = spin_euler_factor(s);
        let table = CoeffTable {
            p,
            n_max,
            dirichlet: factor.inverse_series(n_max),
            hecke: Vec::new(),
            logderiv: logderiv_coeffs(&factor, n_max),
        };
        hecke_from_dirichlet(&table)
    }
}

/// `lambda'(p^n) = lambda~(p^n) - p^{-1} lambda~(p^{n-2})`.
pub fn hecke_from_dirichlet(table: &CoeffTable) -> CoeffTable {
    let inv_p = 1.0 / table.p.as_f64();
    let d = &table.dirichlet;
    let hecke = (0..d.len())
        .map(|n| if n >= 2 { d[n] - inv_p * d[n - 2] } else { d[n] })
        .collect();
    CoeffTable {
        hecke,
        ..table.clone()
    }
}

/// Forward recursion `lambda~(p^n) = sum_j p^{-j} lambda'(p^{n-2j})`.
pub fn dirichlet_from_hecke(p: Prime, hecke: &[f64]) -> Vec<f64> {
    let inv_p = 1.0 / p.as_f64();
    (0..hecke.len())
        .map(|n| {
            let mut acc = 0.0;
            let mut w = 1.0;
            let mut k = n as isize;
            while k >= 0 {
                acc += w * hecke[k as usize];
                w *= inv_p;
                k -= 2;
            }
            acc
        })
        .collect()
}

/// `prod_{p^e || m} coeff(p, e)`; `coeff` returns `None` for primes
/// outside the available data.
pub fn multiplicative_coeff_by<F>(m: u64, mut coeff: F) -> Result<f64>
where
    F: FnMut(u64, u32) -> Option<f64>,
{
    if m == 0 {
        return Err(Error::OutOfRange {
            what: "m",
            value: 0,
            range: ">= 1",
        });
    }
    let mut out = 1.0;
    for (p, e) in factorize(m) {
        out *= coeff(p, e).ok_or(Error::MissingPrime(p))?;
    }
    Ok(out)
}

/// The multiplicative extension of the per-prime coefficients to `m`.
pub fn multiplicative_coeff(assignment: &BTreeMap<u64, SpinSatake>, m: u64, which: LKind) -> Result<f64> {
    multiplicative_coeff_by(m, |p, e| {
        assignment
            .get(&p)
            .map(|&s| dirichlet_coeff(s, e as usize, which))
    })
}

/// Weight `(k1, k2)` with `k1 >= k2 >= 3` and conductor level `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormShape {
    pub k1: u32,
    pub k2: u32,
    pub q: u64,
}

impl FormShape {
    pub fn new(k1: u32, k2: u32, q: u64) -> Result<Self> {
        if k2 < 3 || k1 < k2 {
            return Err(Error::WeightRange {
                k1,
                k2,
                reason: "need k1 >= k2 >= 3",
            });
        }
        if q == 0 {
            return Err(Error::OutOfRange {
                what: "q",
                value: 0,
                range: ">= 1",
            });
        }
        Ok(FormShape { k1, k2, q })
    }
}

/// `c(F) = (k1 + k2)^2 (k1 - k2 + 1)^2 q`.
pub fn analytic_conductor(shape: FormShape) -> f64 {
    let s = (shape.k1 + shape.k2) as u128;
    let d = (shape.k1 - shape.k2 + 1) as u128;
    (s * s * d * d * shape.q as u128) as f64
}

/// Spinor root number at level one, `(-1)^{k2}`.
pub fn spin_root_number_level_one(k2: u32) -> Result<Sign> {
    if k2 < 3 {
        return Err(Error::OutOfRange {
            what: "k2",
            value: k2 as i64,
            range: ">= 3",
        });
    }
    Ok(Sign::from_parity(k2 as i64))
}

/// The standard L-function always has root number `+1`.
pub fn std_root_number() -> Sign {
    Sign::Plus
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaKind {
    /// `Gamma_R(s) = pi^{-s/2} Gamma(s/2)`
    Real,
    /// `Gamma_C(s) = 2 (2 pi)^{-s} Gamma(s)`
    Complex,
}

/// One archimedean factor `Gamma_kind(s + shift)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFactor {
    pub kind: GammaKind,
    pub shift: f64,
}

pub fn gamma_shifts(shape: FormShape, which: LKind) -> Vec<GammaFactor> {
    let (k1, k2) = (shape.k1 as f64, shape.k2 as f64);
    let c = |shift| GammaFactor {
        kind: GammaKind::Complex,
        shift,
    };
    match which {
        LKind::Spin => vec![c((k1 + k2 - 3.0) / 2.0), c((k1 - k2 + 1.0) / 2.0)],
        LKind::Standard => vec![
            GammaFactor {
                kind: GammaKind::Real,
                shift: 0.0,
            },
            c(k1 - 1.0),
            c(k2 - 2.0),
        ],
    }
}
