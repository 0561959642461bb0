//! Determinant route.
//!
//! Expanding `det K_eps` over permutations, a cycle `(i_1 .. i_k)` contributes
//! `int prod phi_{i_m}(x_m) K(x_1, x_2) .. K(x_k, x_1) dx`. Writing
//! `K_eps(x, y) = int_{-1/2}^{1/2} e(xt) (e(-yt) + eps e(yt)) dt` and doing the
//! `x` integrals first turns this into `Tr(A_{i_1} .. A_{i_k})`, with the
//! operator `A_i(t, t') = phi^_i(t - t') + eps phi^_i(t + t')` on
//! `[-1/2, 1/2]`. Traces are discretized with the trapezoid rule on grids
//! whose nodes contain every kink of the transforms, then extrapolated in
//! `h^2`.

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::{max_beta, romberg, Method, PredictionConfig, PredictionReport, SymmetryType, TestFunction};
use crate::error::{Error, Result};

/// Largest `n` handled by the permutation expansion.
const MAX_N: usize = 6;

/// `int phi(x) W(G)(x) dx` for `phi = phi_1 x .. x phi_n`, including the
/// delta contributions of `SO(odd)`.
pub fn n_level_prediction(
    g: SymmetryType,
    phis: &[TestFunction],
    cfg: &PredictionConfig,
) -> Result<PredictionReport> {
    let n = phis.len();
    if !(1..=MAX_N).contains(&n) {
        return Err(Error::OutOfRange {
            what: "n",
            value: n as i64,
            range: "1..=6",
        });
    }
    cfg.check_support(phis)?;
    let ids = identify(phis);
    let cells = aligned_cells(phis, cfg.det_min_cells);
    let all: Vec<usize> = (0..n).collect();
    let zeros: Vec<f64> = phis.iter().map(TestFunction::value_at_zero).collect();

    let (value, error) = romberg(cfg.det_levels, cfg.tolerance, |level| {
        let m = cells << level;
        let plus = || Operators::new(phis, &ids, m, 1.0);
        let minus = || Operators::new(phis, &ids, m, -1.0);
        let odd = |ops: &mut Operators| {
            let mut v = ops.expansion(&all);
            for nu in 0..n {
                let rest: Vec<usize> = all.iter().copied().filter(|&i| i != nu).collect();
                v += zeros[nu] * ops.expansion(&rest);
            }
            v
        };
        Ok(match g {
            SymmetryType::U => Operators::new(phis, &ids, m, 0.0).expansion(&all),
            SymmetryType::SOeven => plus().expansion(&all),
            SymmetryType::Sp => minus().expansion(&all),
            SymmetryType::SOodd => odd(&mut minus()),
            SymmetryType::O => 0.5 * (plus().expansion(&all) + odd(&mut minus())),
        })
    })?;

    Ok(PredictionReport {
        symmetry: g,
        n,
        beta: max_beta(phis),
        value,
        method: Method::Determinant,
        quadrature_error: error,
    })
}

/// Maps each input to the index of its first equal handle, so identical
/// test functions share operators and traces.
fn identify(phis: &[TestFunction]) -> Vec<usize> {
    (0..phis.len())
        .map(|i| (0..=i).find(|&j| phis[j].same_as(&phis[i])).expect("i matches itself"))
        .collect()
}

/// Smallest cell count `m >= min_cells` with `beta m` an even integer for all
/// inputs, so that every kink `t +- t' = +-beta`, `2t = +-beta` sits on a node.
fn aligned_cells(phis: &[TestFunction], min_cells: usize) -> usize {
    let aligned = |m: usize| {
        phis.iter().all(|p| {
            let half = p.beta() * m as f64 / 2.0;
            (half - half.round()).abs() < 1e-9
        })
    };
    (min_cells..=16 * min_cells).find(|&m| aligned(m)).unwrap_or(min_cells)
}

struct Operators {
    mats: HashMap<usize, DMatrix<f64>>,
    ids: Vec<usize>,
    traces: HashMap<Vec<usize>, f64>,
    products: HashMap<Vec<usize>, DMatrix<f64>>,
}

impl Operators {
    fn new(phis: &[TestFunction], ids: &[usize], cells: usize, eps: f64) -> Self {
        let size = cells + 1;
        let h = 1.0 / cells as f64;
        let t: Vec<f64> = (0..size).map(|a| -0.5 + a as f64 * h).collect();
        let sw: Vec<f64> = (0..size)
            .map(|a| if a == 0 || a == cells { (0.5 * h).sqrt() } else { h.sqrt() })
            .collect();
        let mut mats = HashMap::new();
        for &id in ids {
            mats.entry(id).or_insert_with(|| {
                let phi = &phis[id];
                DMatrix::from_fn(size, size, |a, b| {
                    let v = phi.fourier(t[a] - t[b]) + if eps != 0.0 { eps * phi.fourier(t[a] + t[b]) } else { 0.0 };
                    sw[a] * v * sw[b]
                })
            });
        }
        Operators {
            mats,
            ids: ids.to_vec(),
            traces: HashMap::new(),
            products: HashMap::new(),
        }
    }

    /// `sum_sigma sgn(sigma) prod_cycles Tr(...)` over permutations of `subset`.
    fn expansion(&mut self, subset: &[usize]) -> f64 {
        if subset.is_empty() {
            return 1.0;
        }
        let k = subset.len();
        let mut total = 0.0;
        let mut perm: Vec<usize> = (0..k).collect();
        loop {
            let mut seen = vec![false; k];
            let mut term = 1.0;
            let mut cycles = 0;
            for start in 0..k {
                if seen[start] {
                    continue;
                }
                cycles += 1;
                let mut seq = Vec::new();
                let mut i = start;
                while !seen[i] {
                    seen[i] = true;
                    seq.push(self.ids[subset[i]]);
                    i = perm[i];
                }
                term *= self.trace(canonical(seq));
            }
            total += if (k - cycles).is_multiple_of(2) { term } else { -term };
            if !next_permutation(&mut perm) {
                break;
            }
        }
        total
    }

    fn trace(&mut self, key: Vec<usize>) -> f64 {
        if let Some(&v) = self.traces.get(&key) {
            return v;
        }
        let v = match key.len() {
            1 => self.mats[&key[0]].trace(),
            _ => {
                let (head, last) = key.split_at(key.len() - 1);
                let prod = self.product(head);
                // Operators are symmetric, so Tr(P B) is the entrywise dot product.
                prod.dot(&self.mats[&last[0]])
            }
        };
        self.traces.insert(key, v);
        v
    }

    fn product(&mut self, seq: &[usize]) -> DMatrix<f64> {
        if seq.len() == 1 {
            return self.mats[&seq[0]].clone();
        }
        if let Some(p) = self.products.get(seq) {
            return p.clone();
        }
        let (head, last) = seq.split_at(seq.len() - 1);
        let p = self.product(head) * &self.mats[&last[0]];
        self.products.insert(seq.to_vec(), p.clone());
        p
    }
}

/// Smallest rotation of the sequence or of its reverse: traces of symmetric
/// operators are invariant under both.
fn canonical(seq: Vec<usize>) -> Vec<usize> {
    let k = seq.len();
    let mut best = seq.clone();
    let rev: Vec<usize> = seq.iter().rev().copied().collect();
    for s in [&seq, &rev] {
        for r in 0..k {
            let cand: Vec<usize> = (0..k).map(|i| s[(i + r) % k]).collect();
            if cand < best {
                best = cand;
            }
        }
    }
    best
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{Cubature, Rect};

    fn fejer(beta: f64) -> TestFunction {
        TestFunction::fejer(beta).unwrap()
    }

    #[test]
    fn one_level_closed_forms() {
        let phi = fejer(0.9);
        let cfg = PredictionConfig::default();
        let (hat0, at0) = (1.0, 0.9);
        let expected = [
            (SymmetryType::U, hat0),
            (SymmetryType::SOeven, hat0 + 0.5 * at0),
            (SymmetryType::SOodd, hat0 - 0.5 * at0 + at0),
            (SymmetryType::Sp, hat0 - 0.5 * at0),
            (SymmetryType::O, hat0 + 0.5 * at0),
        ];
        for (g, want) in expected {
            let r = n_level_prediction(g, std::slice::from_ref(&phi), &cfg).unwrap();
            assert!((r.value - want).abs() < 1e-8, "{g}: {} vs {want}", r.value);
            assert_eq!(r.method, Method::Determinant);
        }
    }

    /// Fejer squared: `phi(x) = (b sinc^2(b x))^2`, whose transform is the
    /// self-convolution of the triangle, supported in `[-2b, 2b]`.
    fn fejer_squared(b: f64) -> TestFunction {
        let fourier = move |u: f64| {
            let v = u.abs() / b;
            b * if v <= 1.0 {
                2.0 / 3.0 - v * v + 0.5 * v * v * v
            } else if v <= 2.0 {
                (2.0 - v).powi(3) / 6.0
            } else {
                0.0
            }
        };
        let f = fejer(b);
        TestFunction::from_parts(2.0 * b, fourier, move |x| f.eval(x).unwrap().powi(2), "fejer^2").unwrap()
    }

    #[test]
    fn two_level_matches_direct_quadrature_of_the_determinant() {
        // x-space integration of phi(x) phi(y) det K over a window wide
        // enough for the x^-4 tails, against the Fourier-space traces.
        let phi = fejer_squared(0.2);
        let cfg = PredictionConfig::default();
        for g in [SymmetryType::SOeven, SymmetryType::Sp, SymmetryType::U] {
            let fourier = n_level_prediction(g, &[phi.clone(), phi.clone()], &cfg).unwrap().value;
            let eps = f64::from(g.epsilon().unwrap());
            let w = 40.0;
            let cub = Cubature::new(16, 1e-7, 200_000);
            let direct = cub
                .integrate_2d(
                    |x, y| {
                        let k = |a: f64, b: f64| crate::kernels::kernel_eval(eps as i8, a, b);
                        let det = k(x, x) * k(y, y) - k(x, y) * k(y, x);
                        phi.eval(x).unwrap() * phi.eval(y).unwrap() * det
                    },
                    Rect::new(-w, w, -w, w),
                )
                .unwrap()
                .value;
            assert!((fourier - direct).abs() < 1e-5, "{g}: {fourier} vs {direct}");
        }
    }

    #[test]
    fn support_and_size_checks() {
        let cfg = PredictionConfig::default();
        let wide = fejer(0.5);
        let err = n_level_prediction(SymmetryType::SOeven, &[wide.clone(), wide], &cfg).unwrap_err();
        assert!(matches!(err, Error::SupportViolation { .. }));
        assert!(n_level_prediction(SymmetryType::U, &[], &cfg).is_err());
    }

    #[test]
    fn canonical_cycles() {
        assert_eq!(canonical(vec![2, 0, 1]), vec![0, 1, 2]);
        assert_eq!(canonical(vec![1, 0, 2]), vec![0, 1, 2]);
        let mut p = vec![0, 1, 2];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 6);
    }
}
