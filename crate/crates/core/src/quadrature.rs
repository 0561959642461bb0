//! Gauss-Legendre panels with adaptive dyadic subdivision, in one and two
//! dimensions.
//!
//! Each work item carries a coarse value (one panel) and a refined value (the
//! sum over its children); their difference is the item's error estimate. The
//! item with the largest estimate is split until the total estimate drops
//! under tolerance or the panel budget runs out.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::stream::pairwise_sum;

/// Nodes and weights of the `order`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    if order == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// An integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    fn split(&self) -> [Rect; 4] {
        let xm = 0.5 * (self.x0 + self.x1);
        let ym = 0.5 * (self.y0 + self.y1);
        [
            Rect::new(self.x0, xm, self.y0, ym),
            Rect::new(xm, self.x1, self.y0, ym),
            Rect::new(self.x0, xm, ym, self.y1),
            Rect::new(xm, self.x1, ym, self.y1),
        ]
    }
}

/// Adaptive tensor Gauss-Legendre cubature settings.
#[derive(Debug, Clone)]
pub struct Cubature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    pub tolerance: f64,
    pub max_panels: usize,
}

impl Default for Cubature {
    fn default() -> Self {
        Cubature::new(12, 1e-10, 40_000)
    }
}

struct Item<T> {
    region: T,
    children: Vec<f64>,
    error: f64,
    seq: usize,
}

impl<T> PartialEq for Item<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T> Eq for Item<T> {}
impl<T> PartialOrd for Item<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Item<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl Cubature {
    pub fn new(order: usize, tolerance: f64, max_panels: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Cubature {
            nodes,
            weights,
            tolerance,
            max_panels,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    fn panel_2d<F: Fn(f64, f64) -> f64>(&self, f: &F, r: &Rect) -> f64 {
        let (cx, hx) = (0.5 * (r.x0 + r.x1), 0.5 * (r.x1 - r.x0));
        let (cy, hy) = (0.5 * (r.y0 + r.y1), 0.5 * (r.y1 - r.y0));
        let mut acc = 0.0;
        for (&u, &wu) in self.nodes.iter().zip(&self.weights) {
            let x = cx + hx * u;
            let mut row = 0.0;
            for (&v, &wv) in self.nodes.iter().zip(&self.weights) {
                row += wv * f(x, cy + hy * v);
            }
            acc += wu * row;
        }
        acc * hx * hy
    }

    fn panel_1d<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = 0.0;
        for (&u, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * u);
        }
        acc * h
    }

    /// Integrates `f` over the rectangle.
    pub fn integrate_2d<F: Fn(f64, f64) -> f64>(&self, f: F, region: Rect) -> Result<Integral> {
        let coarse = self.panel_2d(&f, &region);
        self.refine(
            region,
            coarse,
            |r: &Rect| r.split().to_vec(),
            |r: &Rect| self.panel_2d(&f, r),
        )
    }

    /// Integrates `f` over `[a, b]`, starting from the given breakpoints
    /// (interior points where `f` is known to be non-smooth).
    pub fn integrate_1d<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, breaks: &[f64]) -> Result<Integral> {
        let mut cuts = vec![a];
        cuts.extend(breaks.iter().copied().filter(|&c| c > a && c < b));
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut total = Integral {
            value: 0.0,
            error: 0.0,
            panels: 0,
        };
        let pieces = (cuts.len() - 1) as f64;
        let sub = Cubature {
            tolerance: self.tolerance / pieces,
            ..self.clone()
        };
        for w in cuts.windows(2) {
            let coarse = sub.panel_1d(&f, w[0], w[1]);
            let part = sub.refine(
                (w[0], w[1]),
                coarse,
                |&(l, r): &(f64, f64)| {
                    let m = 0.5 * (l + r);
                    vec![(l, m), (m, r)]
                },
                |&(l, r): &(f64, f64)| sub.panel_1d(&f, l, r),
            )?;
            total.value += part.value;
            total.error += part.error;
            total.panels += part.panels;
        }
        Ok(total)
    }

    fn refine<T, S, P>(&self, root: T, root_value: f64, split: S, panel: P) -> Result<Integral>
    where
        S: Fn(&T) -> Vec<T>,
        P: Fn(&T) -> f64,
    {
        let mut seq = 0usize;
        let mut make = |region: T, coarse: f64| {
            let kids = split(&region);
            let children: Vec<f64> = kids.iter().map(&panel).collect();
            let error = (coarse - children.iter().sum::<f64>()).abs();
            seq += 1;
            Item {
                region,
                children,
                error,
                seq,
            }
        };
        let mut heap = BinaryHeap::new();
        heap.push(make(root, root_value));
        let mut panels = 1usize;
        let mut running = heap.peek().map_or(0.0, |it| it.error);
        loop {
            if running <= self.tolerance || panels >= self.max_panels {
                let total_error: f64 = heap.iter().map(|it| it.error).sum();
                if total_error > self.tolerance && panels < self.max_panels {
                    running = total_error;
                    continue;
                }
                let mut items = heap.into_vec();
                items.sort_by_key(|it| it.seq);
                let values: Vec<f64> = items.iter().flat_map(|it| it.children.iter().copied()).collect();
                let result = Integral {
                    value: pairwise_sum(&values),
                    error: total_error,
                    panels,
                };
                if total_error > self.tolerance {
                    return Err(Error::NonConvergence {
                        achieved: total_error,
                        tolerance: self.tolerance,
                        panels,
                    });
                }
                return Ok(result);
            }
            let worst = heap.pop().expect("heap is never empty");
            running -= worst.error;
            let kids = split(&worst.region);
            for (kid, value) in kids.into_iter().zip(worst.children) {
                let item = make(kid, value);
                running += item.error;
                heap.push(item);
                panels += 1;
            }
            running = running.max(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for order in [1usize, 2, 5, 12, 20] {
            let (x, w) = gauss_legendre(order);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * order - 1;
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = 2.0 / deg as f64;
            assert!((got - exact).abs() < 1e-13, "order {order}: {got} vs {exact}");
        }
    }

    #[test]
    fn adaptive_1d_handles_kinks() {
        let c = Cubature::new(8, 1e-12, 10_000);
        let r = c.integrate_1d(|x: f64| x.abs(), -1.0, 2.0, &[]).unwrap();
        assert!((r.value - 2.5).abs() < 1e-10);
        let r = c.integrate_1d(|x: f64| (1.0 - x.abs()).max(0.0), -1.0, 1.0, &[0.0]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_2d_smooth_and_budget() {
        let c = Cubature::default();
        let r = c
            .integrate_2d(|x, y| (x + y).exp(), Rect::new(0.0, 1.0, 0.0, 1.0))
            .unwrap();
        let e1 = std::f64::consts::E - 1.0;
        assert!((r.value - e1 * e1).abs() < 1e-12);
        let tiny = Cubature::new(2, 1e-14, 5);
        let err = tiny
            .integrate_2d(|x, y| ((x - 0.3).abs() * (y - 0.7).abs()).sqrt(), Rect::new(0.0, 1.0, 0.0, 1.0))
            .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }
}
