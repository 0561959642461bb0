//! Combinatorial route: the sum over set partitions `L` of `{1..n}`,
//!
//! ```text
//! sum_L (-2)^{n - nu} prod (|L_l| - 1)!
//!   sum_{S even} prod_{l not in S} (Phi^_l(0) + sign Phi_l(0) / 2)
//!   sum_{pairings of S} 2^{|S|/2} prod int |u| Phi^_a(u) Phi^_b(u) du
//! ```
//!
//! where `Phi_l` is the product of the `phi_i` in block `l`, so `Phi^_l` is
//! the convolution of their transforms. Convolutions and the `|u|` integrals
//! use the trapezoid rule on a uniform `u` grid, extrapolated in `h^2`.

use std::collections::HashMap;

use super::combinatorics::{enumerate_pairings, enumerate_partitions, factorial};
use super::{max_beta, romberg, Method, PredictionConfig, PredictionReport, SymmetryType, TestFunction, SUPPORT_SLACK};
use crate::error::{Error, Result};
use crate::sign::Sign;

const MAX_N: usize = 6;

/// The combinatorial expansion; `Sign::Plus` targets `SO(even)` and
/// `Sign::Minus` the continuous `Sp` part.
pub fn rubinstein_rhs(sign: Sign, phis: &[TestFunction], cfg: &PredictionConfig) -> Result<PredictionReport> {
    let n = phis.len();
    if !(1..=MAX_N).contains(&n) {
        return Err(Error::OutOfRange {
            what: "n",
            value: n as i64,
            range: "1..=6",
        });
    }
    cfg.check_support(phis)?;
    let total: f64 = phis.iter().map(TestFunction::beta).sum();
    if total >= 1.0 - SUPPORT_SLACK {
        return Err(Error::SupportViolation { beta: total, limit: 1.0 });
    }
    let partitions = enumerate_partitions(n)?;
    let half_sign = 0.5 * sign.as_f64();

    let (value, error) = romberg(cfg.conv_levels, cfg.tolerance, |level| {
        let h = cfg.conv_step / f64::from(1u32 << level);
        let mut grid = BlockGrid::new(phis, h);
        let mut acc = 0.0;
        for part in &partitions {
            let masks = part.masks();
            let nu = masks.len();
            let weight = (-2f64).powi((n - nu) as i32)
                * part.blocks.iter().map(|b| factorial(b.len() - 1)).product::<f64>();
            let singles: Vec<f64> = masks
                .iter()
                .map(|&m| {
                    let b = grid.block(m);
                    b.hat0 + half_sign * b.at0
                })
                .collect();
            let mut inner = 0.0;
            for s in 0u32..(1 << nu) {
                if s.count_ones() % 2 == 1 {
                    continue;
                }
                let members: Vec<usize> = (0..nu).filter(|&l| s & (1 << l) != 0).collect();
                let outside: f64 = (0..nu).filter(|&l| s & (1 << l) == 0).map(|l| singles[l]).product();
                let mut pair_sum = 0.0;
                for pairing in enumerate_pairings(&members)? {
                    let mut term = 1.0;
                    for &(a, b) in &pairing {
                        term *= 2.0 * grid.cross(masks[a], masks[b]);
                    }
                    pair_sum += term;
                }
                inner += outside * pair_sum;
            }
            acc += weight * inner;
        }
        Ok(acc)
    })?;

    Ok(PredictionReport {
        symmetry: SymmetryType::from_sign(sign),
        n,
        beta: max_beta(phis),
        value,
        method: Method::Combinatorial,
        quadrature_error: error,
    })
}

/// `Phi^_l` sampled at `u = k h`, `k = -half..=half`.
struct Block {
    values: Vec<f64>,
    half: usize,
    hat0: f64,
    at0: f64,
}

struct BlockGrid<'a> {
    phis: &'a [TestFunction],
    h: f64,
    blocks: HashMap<u32, Block>,
    crosses: HashMap<(u32, u32), f64>,
}

impl<'a> BlockGrid<'a> {
    fn new(phis: &'a [TestFunction], h: f64) -> Self {
        BlockGrid {
            phis,
            h,
            blocks: HashMap::new(),
            crosses: HashMap::new(),
        }
    }

    fn sampled(&self, i: usize) -> (Vec<f64>, usize) {
        let phi = &self.phis[i];
        let half = (phi.beta() / self.h - 1e-9).ceil() as usize;
        let values = (0..=2 * half)
            .map(|k| phi.fourier((k as f64 - half as f64) * self.h))
            .collect();
        (values, half)
    }

    fn block(&mut self, mask: u32) -> &Block {
        if !self.blocks.contains_key(&mask) {
            let members: Vec<usize> = (0..self.phis.len()).filter(|&i| mask & (1 << i) != 0).collect();
            let (mut values, mut half) = self.sampled(members[0]);
            let mut at0 = self.h * values.iter().sum::<f64>();
            for &i in &members[1..] {
                let (v, hv) = self.sampled(i);
                at0 *= self.h * v.iter().sum::<f64>();
                values = convolve(&values, &v, self.h);
                half += hv;
            }
            let hat0 = values[half];
            self.blocks.insert(mask, Block { values, half, hat0, at0 });
        }
        &self.blocks[&mask]
    }

    /// `int |u| Phi^_a(u) Phi^_b(u) du`.
    fn cross(&mut self, a: u32, b: u32) -> f64 {
        let key = (a.min(b), a.max(b));
        if let Some(&v) = self.crosses.get(&key) {
            return v;
        }
        let h = self.h;
        self.block(a);
        self.block(b);
        let (ba, bb) = (&self.blocks[&a], &self.blocks[&b]);
        let half = ba.half.min(bb.half);
        let mut acc = 0.0;
        for k in 1..=half {
            let u = k as f64 * h;
            acc += u * (ba.values[ba.half + k] * bb.values[bb.half + k] + ba.values[ba.half - k] * bb.values[bb.half - k]);
        }
        let v = h * acc;
        self.crosses.insert(key, v);
        v
    }
}

fn convolve(a: &[f64], b: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    for v in &mut out {
        *v *= h;
    }
    out
}
