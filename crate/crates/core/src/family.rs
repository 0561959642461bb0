//! Synthetic families whose Satake data follow the product of the local
//! measures exactly, with coefficient-average and joint-moment tests.
//!
//! Root numbers are assigned independently of the Satake data, which is the
//! null model for the `+-` subfamily split.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{factorize, Prime};
use crate::error::{Error, Result};
use crate::hecke::{dirichlet_coeff, multiplicative_coeff_by, FormShape, LKind, SpinSatake};
use crate::measures::{integrate, MeasureSpec, SatakePoint, Sampler};
use crate::sign::Sign;
use crate::stream::{mean_stderr, z_score};

/// Recorded in every report: the family is a null model for these checks.
pub const MODEL_NOTE: &str = "synthetic family: Satake data drawn from the product of local measures; root numbers independent of Satake data";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonRule {
    /// `(-1)^{k2}` for every form.
    LevelOneParity(u32),
    /// Alternating `+1, -1, +1, ...` by form id.
    Balanced,
}

impl EpsilonRule {
    pub fn epsilon(self, id: u64) -> Sign {
        match self {
            EpsilonRule::LevelOneParity(k2) => Sign::from_parity(i64::from(k2)),
            EpsilonRule::Balanced if id.is_multiple_of(2) => Sign::Plus,
            EpsilonRule::Balanced => Sign::Minus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub primes: Vec<Prime>,
    pub forms: usize,
    pub seed: u64,
    pub epsilon_rule: EpsilonRule,
    /// Shared by all forms; the conductor is held fixed at `q = N`.
    pub shape: FormShape,
}

impl FamilySpec {
    /// Validates the inputs; the shape defaults to `(k2, k2, 1)` under the
    /// level-one rule and `(4, 4, 1)` otherwise.
    pub fn new(primes: &[u64], forms: usize, seed: u64, epsilon_rule: EpsilonRule) -> Result<Self> {
        let shape = match epsilon_rule {
            EpsilonRule::LevelOneParity(k2) => FormShape::new(k2, k2, 1)?,
            EpsilonRule::Balanced => FormShape::new(4, 4, 1)?,
        };
        Self::with_shape(primes, forms, seed, epsilon_rule, shape)
    }

    pub fn with_shape(primes: &[u64], forms: usize, seed: u64, epsilon_rule: EpsilonRule, shape: FormShape) -> Result<Self> {
        if forms == 0 {
            return Err(Error::OutOfRange {
                what: "forms",
                value: 0,
                range: ">= 1",
            });
        }
        let mut seen = primes.to_vec();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != primes.len() || primes.is_empty() {
            return Err(Error::Domain("family primes must be a nonempty list of distinct primes".into()));
        }
        if let EpsilonRule::LevelOneParity(k2) = epsilon_rule {
            if k2 != shape.k2 {
                return Err(Error::Domain(format!("parity rule k2 = {k2} disagrees with shape k2 = {}", shape.k2)));
            }
        }
        Ok(FamilySpec {
            primes: primes.iter().map(|&p| Prime::new(p)).collect::<Result<_>>()?,
            forms,
            seed,
            epsilon_rule,
            shape,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticForm {
    pub id: u64,
    pub satake: BTreeMap<u64, SatakePoint>,
    pub shape: FormShape,
    pub spin_epsilon: Sign,
}

impl SyntheticForm {
    /// `lambda~(m)` or `mu(m)` from the multiplicative extension.
    pub fn coefficient(&self, m: u64, which: LKind) -> Result<f64> {
        multiplicative_coeff_by(m, |p, e| {
            self.satake
                .get(&p)
                .map(|&pt| dirichlet_coeff(SpinSatake::from_point(pt), e as usize, which))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub spec: FamilySpec,
    pub forms: Vec<SyntheticForm>,
}

/// Draws every form's Satake point at each prime from `mu_p`, keyed by
/// `(seed, prime, form id)`, so the result is independent of the thread count.
pub fn generate_family(spec: &FamilySpec) -> Result<Family> {
    let samplers = spec
        .primes
        .iter()
        .map(|&p| Ok((p.get(), Sampler::new(MeasureSpec::mu_p(p.get())?)?)))
        .collect::<Result<Vec<_>>>()?;
    let forms = (0..spec.forms as u64)
        .into_par_iter()
        .map(|id| {
            let satake = samplers
                .iter()
                .map(|(p, s)| Ok((*p, s.draw(spec.seed, id)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            Ok(SyntheticForm {
                id,
                satake,
                shape: spec.shape,
                spin_epsilon: spec.epsilon_rule.epsilon(id),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Family {
        spec: spec.clone(),
        forms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub count: usize,
}

fn check_window(family: &Family, m: u64) -> Result<()> {
    for (p, _) in factorize(m) {
        if !family.spec.primes.iter().any(|q| q.get() == p) {
            return Err(Error::MissingPrime(p));
        }
    }
    Ok(())
}

fn estimate_over<'a, I>(forms: I, m: u64, which: LKind) -> Result<Estimate>
where
    I: IntoIterator<Item = &'a SyntheticForm>,
{
    let values = forms
        .into_iter()
        .map(|f| f.coefficient(m, which))
        .collect::<Result<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(Error::Domain("no forms to average over".into()));
    }
    let (estimate, stderr) = mean_stderr(&values);
    Ok(Estimate {
        estimate,
        stderr,
        count: values.len(),
    })
}

/// Sample mean and standard error of the coefficient at `m` over the family.
pub fn average_coefficient(family: &Family, m: u64, which: LKind) -> Result<Estimate> {
    check_window(family, m)?;
    estimate_over(&family.forms, m, which)
}

/// `delta_square(m) m^{-1/2} prod_{p^v || m} (1 + p^-2 + ... + p^-v)`.
pub fn main_term_spin(m: u64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let mut out = 1.0;
    for (p, v) in factorize(m) {
        if v % 2 == 1 {
            return 0.0;
        }
        out *= prime_power_main_term(p, v);
    }
    out
}

/// `sum_{i=0}^{n/2} p^{-n/2 - 2i}` for even `n`, zero for odd `n`.
pub fn prime_power_main_term(p: u64, n: u32) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    let p = p as f64;
    let half = i32::try_from(n / 2).expect("small exponent");
    (0..=half).map(|i| p.powi(-half - 2 * i)).sum()
}

/// Leading behaviour of the averaged standard coefficient: the `delta`
/// part is known, the `p^-1 h(p^-1)` correction is not, so it is returned as
/// a band of half-width `1 / min p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdMainTerm {
    pub leading: f64,
    pub band: f64,
    pub correction_known: bool,
}

pub fn main_term_std(m: u64) -> StdMainTerm {
    let f = factorize(m);
    let leading = if f.iter().all(|&(_, v)| v % 2 == 0) { 1.0 } else { 0.0 };
    let band = f.first().map_or(0.0, |&(p, _)| 1.0 / p as f64);
    StdMainTerm {
        leading,
        band,
        correction_known: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub m: u64,
    pub which: LKind,
    pub forms: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub prediction: f64,
    pub z: f64,
}

/// The spinor average at `m` against `main_term_spin(m)`.
pub fn coefficient_report(family: &Family, m: u64) -> Result<CoefficientReport> {
    let e = average_coefficient(family, m, LKind::Spin)?;
    Ok(report_from(m, e, main_term_spin(m)))
}

fn report_from(m: u64, e: Estimate, prediction: f64) -> CoefficientReport {
    CoefficientReport {
        m,
        which: LKind::Spin,
        forms: e.count,
        estimate: e.estimate,
        stderr: e.stderr,
        prediction,
        z: z_score(e.estimate, e.stderr, prediction),
    }
}

/// One factor `a_p^e b_p^f` of a mixed monomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialFactor {
    pub p: u64,
    pub a_power: u32,
    pub b_power: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub monomial: Vec<MonomialFactor>,
    pub estimate: f64,
    pub stderr: f64,
    pub prediction: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointReport {
    pub primes: Vec<u64>,
    pub max_degree: u32,
    pub forms: usize,
    pub rows: Vec<MomentRow>,
    pub max_abs_z: f64,
    pub note: String,
}

/// All exponent vectors of length `len` with total degree in `1..=max`.
fn exponent_vectors(len: usize, max: u32) -> Vec<Vec<u32>> {
    fn go(len: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e);
            go(len, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(len, max, &mut Vec::new(), &mut out);
    out.retain(|v| v.iter().any(|&e| e > 0));
    out
}

/// Every mixed moment `E[prod_i a_{p_i}^{e_i} b_{p_i}^{f_i}]` of total degree
/// up to `max_degree`, against the product of per-prime quadrature moments.
pub fn joint_sato_tate_test(family: &Family, primes: &[u64], max_degree: u32) -> Result<JointReport> {
    if max_degree == 0 || max_degree > 4 {
        return Err(Error::OutOfRange {
            what: "max_degree",
            value: i64::from(max_degree),
            range: "1..=4",
        });
    }
    for &p in primes {
        check_window(family, p)?;
    }
    let mut local: BTreeMap<(u64, u32, u32), f64> = BTreeMap::new();
    for &p in primes {
        let spec = MeasureSpec::mu_p(p)?;
        for e in 0..=max_degree {
            for f in 0..=(max_degree - e) {
                let v = integrate(&spec, |x, y| x.powi(e as i32) * y.powi(f as i32))?.value;
                local.insert((p, e, f), v);
            }
        }
    }
    let mut rows = Vec::new();
    for exps in exponent_vectors(2 * primes.len(), max_degree) {
        let monomial: Vec<MonomialFactor> = primes
            .iter()
            .enumerate()
            .map(|(i, &p)| MonomialFactor {
                p,
                a_power: exps[2 * i],
                b_power: exps[2 * i + 1],
            })
            .collect();
        let prediction: f64 = monomial.iter().map(|t| local[&(t.p, t.a_power, t.b_power)]).product();
        let values: Vec<f64> = family
            .forms
            .iter()
            .map(|form| {
                monomial
                    .iter()
                    .map(|t| {
                        let pt = form.satake[&t.p];
                        pt.a().powi(t.a_power as i32) * pt.b().powi(t.b_power as i32)
                    })
                    .product()
            })
            .collect();
        let (estimate, stderr) = mean_stderr(&values);
        rows.push(MomentRow {
            monomial,
            estimate,
            stderr,
            prediction,
            z: z_score(estimate, stderr, prediction),
        });
    }
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    Ok(JointReport {
        primes: primes.to_vec(),
        max_degree,
        forms: family.forms.len(),
        rows,
        max_abs_z,
        note: MODEL_NOTE.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlusMinusReport {
    pub m: u64,
    pub plus: CoefficientReport,
    pub minus: CoefficientReport,
    /// `|d+ - d-| / d`.
    pub balance: f64,
    pub note: String,
}

/// Coefficient averages on the `epsilon = +1` and `-1` subfamilies.
pub fn plus_minus_split_test(family: &Family, m: u64) -> Result<PlusMinusReport> {
    if family.spec.epsilon_rule != EpsilonRule::Balanced {
        return Err(Error::Domain("the +- split needs the balanced root-number rule".into()));
    }
    check_window(family, m)?;
    let prediction = main_term_spin(m);
    let side = |s: Sign| -> Result<CoefficientReport> {
        let e = estimate_over(family.forms.iter().filter(|f| f.spin_epsilon == s), m, LKind::Spin)?;
        Ok(report_from(m, e, prediction))
    };
    let plus = side(Sign::Plus)?;
    let minus = side(Sign::Minus)?;
    let balance = (plus.forms as f64 - minus.forms as f64).abs() / family.forms.len() as f64;
    Ok(PlusMinusReport {
        m,
        plus,
        minus,
        balance,
        note: MODEL_NOTE.into(),
    })
}

/// Empirical size of the first correction to the averaged standard
/// coefficient at `p^2`: `C = max_p p |E[mu(p^2)] - 1|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StdLeadingFit {
    pub rows: Vec<(u64, Estimate)>,
    pub fitted_c: f64,
}

pub fn std_leading_fit(family: &Family) -> Result<StdLeadingFit> {
    let mut rows = Vec::new();
    let mut fitted_c: f64 = 0.0;
    for p in &family.spec.primes {
        let p = p.get();
        let e = average_coefficient(family, p * p, LKind::Standard)?;
        fitted_c = fitted_c.max(p as f64 * (e.estimate - 1.0).abs());
        rows.push((p, e));
    }
    Ok(StdLeadingFit { rows, fitted_c })
}

/// One row per form and prime, header `form_id,prime,a,b,epsilon`.
pub fn write_family_csv<W: Write + ?Sized>(family: &Family, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "form_id,prime,a,b,epsilon")?;
    for f in &family.forms {
        for (p, pt) in &f.satake {
            writeln!(out, "{},{},{},{},{}", f.id, p, pt.a(), pt.b(), f.spin_epsilon.value())?;
        }
    }
    Ok(())
}

/// Parses the output of [`write_family_csv`]; all forms get `shape`.
pub fn read_family_csv<R: BufRead>(input: R, shape: FormShape) -> Result<Vec<SyntheticForm>> {
    let bad = |line: usize, what: &str| Error::Domain(format!("family csv line {line}: {what}"));
    let mut forms: BTreeMap<u64, SyntheticForm> = BTreeMap::new();
    for (k, line) in input.lines().enumerate() {
        let line = line.map_err(|e| bad(k + 1, &e.to_string()))?;
        if k == 0 {
            if line != "form_id,prime,a,b,epsilon" {
                return Err(bad(1, "unexpected header"));
            }
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(bad(k + 1, "expected 5 fields"));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|e| bad(k + 1, &e.to_string()));
        let real = |s: &str| s.parse::<f64>().map_err(|e| bad(k + 1, &e.to_string()));
        let id = int(cells[0])?;
        let p = int(cells[1])?;
        let pt = SatakePoint::new(real(cells[2])?, real(cells[3])?)?;
        let eps = match cells[4] {
            "1" => Sign::Plus,
            "-1" => Sign::Minus,
            _ => return Err(bad(k + 1, "epsilon must be 1 or -1")),
        };
        let form = forms.entry(id).or_insert_with(|| SyntheticForm {
            id,
            satake: BTreeMap::new(),
            shape,
            spin_epsilon: eps,
        });
        if form.spin_epsilon != eps {
            return Err(bad(k + 1, "inconsistent epsilon for form"));
        }
        form.satake.insert(p, pt);
    }
    Ok(forms.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family(forms: usize, rule: EpsilonRule, seed: u64) -> Family {
        generate_family(&FamilySpec::new(&[2, 3, 5], forms, seed, rule).unwrap()).unwrap()
    }

    #[test]
    fn main_term_values() {
        assert_eq!(main_term_spin(1), 1.0);
        assert_eq!(main_term_spin(4), 0.625);
        assert_eq!(main_term_spin(12), 0.0);
        assert_eq!(main_term_spin(2), 0.0);
        let want = (1.0 / 6.0) * (1.0 + 0.25) * (1.0 + 1.0 / 9.0);
        assert!((main_term_spin(36) - want).abs() < 1e-15);
        assert!((main_term_spin(36) - 0.231481).abs() < 1e-6);
        assert_eq!(prime_power_main_term(2, 4), 0.25 * (1.0 + 0.25 + 0.0625));
    }

    #[test]
    fn std_main_term_bands() {
        assert_eq!(main_term_std(1), StdMainTerm { leading: 1.0, band: 0.0, correction_known: false });
        let single = main_term_std(7);
        assert_eq!((single.leading, single.band), (0.0, 1.0 / 7.0));
        let square = main_term_std(49);
        assert_eq!((square.leading, square.band), (1.0, 1.0 / 7.0));
    }

    #[test]
    fn epsilon_rules() {
        let f = family(101, EpsilonRule::Balanced, 1);
        let plus = f.forms.iter().filter(|x| x.spin_epsilon == Sign::Plus).count() as i64;
        assert!((2 * plus - 101).abs() <= 1);
        let odd = generate_family(&FamilySpec::new(&[2], 20, 1, EpsilonRule::LevelOneParity(11)).unwrap()).unwrap();
        assert!(odd.forms.iter().all(|x| x.spin_epsilon == Sign::Minus));
        for form in &f.forms {
            assert_eq!(form.satake.len(), 3);
            for pt in form.satake.values() {
                assert!(pt.a().abs() <= 2.0 && pt.b().abs() <= 2.0);
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(FamilySpec::new(&[2, 2], 10, 0, EpsilonRule::Balanced).is_err());
        assert!(FamilySpec::new(&[2, 4], 10, 0, EpsilonRule::Balanced).is_err());
        assert!(FamilySpec::new(&[2], 0, 0, EpsilonRule::Balanced).is_err());
        let shape = FormShape::new(6, 4, 1).unwrap();
        assert!(FamilySpec::with_shape(&[2], 5, 0, EpsilonRule::LevelOneParity(5), shape).is_err());
    }

    #[test]
    fn generation_is_deterministic_across_thread_counts() {
        let spec = FamilySpec::new(&[2, 3], 300, 42, EpsilonRule::Balanced).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| generate_family(&spec).unwrap());
        let b = many.install(|| generate_family(&spec).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn coefficient_averages_and_coverage() {
        let f = family(20_000, EpsilonRule::Balanced, 7);
        let one = average_coefficient(&f, 1, LKind::Spin).unwrap();
        assert_eq!((one.estimate, one.stderr), (1.0, 0.0));
        for m in [2, 4, 9, 8, 16, 12, 36] {
            let r = coefficient_report(&f, m).unwrap();
            assert!(r.z.abs() < 4.0, "{r:?}");
        }
        assert_eq!(average_coefficient(&f, 7, LKind::Spin).unwrap_err(), Error::MissingPrime(7));
    }

    #[test]
    fn coprime_products_average_to_products() {
        let f = family(20_000, EpsilonRule::Balanced, 11);
        let joint = average_coefficient(&f, 4 * 9, LKind::Spin).unwrap();
        let left = average_coefficient(&f, 4, LKind::Spin).unwrap();
        let right = average_coefficient(&f, 9, LKind::Spin).unwrap();
        let product = left.estimate * right.estimate;
        assert!((joint.estimate - product).abs() < 4.0 * joint.stderr);
    }

    #[test]
    fn joint_moments_factor_over_primes() {
        let f = family(20_000, EpsilonRule::Balanced, 3);
        let r = joint_sato_tate_test(&f, &[2, 3], 2).unwrap();
        assert_eq!(r.rows.len(), 14);
        assert!(r.max_abs_z < 4.0, "{}", r.max_abs_z);
        let single = joint_sato_tate_test(&f, &[5], 2).unwrap();
        assert_eq!(single.rows.len(), 5);
        assert!(joint_sato_tate_test(&f, &[2], 5).is_err());
    }

    #[test]
    fn plus_minus_split() {
        let f = family(10_001, EpsilonRule::Balanced, 5);
        let r = plus_minus_split_test(&f, 4).unwrap();
        assert!(r.plus.z.abs() < 4.0 && r.minus.z.abs() < 4.0);
        assert!(r.balance <= 1.0 / 10_001.0 + 1e-15);
        assert_eq!(r.plus.forms + r.minus.forms, 10_001);
        let parity = family(10, EpsilonRule::LevelOneParity(10), 5);
        assert!(plus_minus_split_test(&parity, 4).is_err());
    }

    #[test]
    fn std_fit_is_order_one_over_p() {
        let f = family(20_000, EpsilonRule::Balanced, 9);
        let fit = std_leading_fit(&f).unwrap();
        assert_eq!(fit.rows.len(), 3);
        assert!(fit.fitted_c.is_finite());
    }

    #[test]
    fn csv_round_trip() {
        let f = family(25, EpsilonRule::Balanced, 13);
        let mut buf = Vec::new();
        write_family_csv(&f, &mut buf).unwrap();
        let parsed = read_family_csv(buf.as_slice(), f.spec.shape).unwrap();
        assert_eq!(parsed, f.forms);
        assert!(read_family_csv("bad\n".as_bytes(), f.spec.shape).is_err());
    }
}
