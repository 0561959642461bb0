use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::Cubature;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Slack allowed when checking that the transform vanishes outside its
/// declared support.
pub const SUPPORT_SLACK: f64 = 1e-12;

/// An even test function `phi`, given through its Fourier transform
/// `phi^(u) = int phi(x) e^{-2 pi i x u} dx`, supported in `[-beta, beta]`.
#[derive(Clone)]
pub struct TestFunction {
    beta: f64,
    fourier: RealFn,
    physical: Option<RealFn>,
    at_zero: f64,
    label: String,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("label", &self.label)
            .field("beta", &self.beta)
            .finish()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("support half-width {beta} must be positive")))
    }
}

fn sinc(x: f64) -> f64 {
    let y = PI * x;
    if y.abs() < 1e-8 {
        1.0 - y * y / 6.0
    } else {
        y.sin() / y
    }
}

impl TestFunction {
    /// Fejer kernel: `phi^(u) = max(0, 1 - |u|/beta)` and
    /// `phi(x) = beta sinc^2(beta x)`.
    pub fn fejer(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(TestFunction {
            beta,
            fourier: Arc::new(move |u: f64| (1.0 - u.abs() / beta).max(0.0)),
            physical: Some(Arc::new(move |x: f64| {
                let s = sinc(beta * x);
                beta * s * s
            })),
            at_zero: beta,
            label: format!("fejer({beta})"),
        })
    }

    /// A test function from an even transform supported in `[-beta, beta]`.
    /// `phi(0)` is computed once by quadrature; other values of `phi` are
    /// computed on demand.
    pub fn from_fourier<F>(beta: f64, fourier: F, label: impl Into<String>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_beta(beta)?;
        for k in 1..=64 {
            let u = beta * k as f64 / 64.0;
            let (l, r) = (fourier(u), fourier(-u));
            if (l - r).abs() > 1e-12 * (1.0 + l.abs()) {
                return Err(Error::Domain(format!("transform is not even at u = {u}: {l} vs {r}")));
            }
        }
        for u in [beta * (1.0 + 1e-9) + SUPPORT_SLACK, 2.0 * beta, 10.0 * beta] {
            if fourier(u) != 0.0 {
                return Err(Error::Domain(format!("transform is nonzero at u = {u} outside [-{beta}, {beta}]")));
            }
        }
        let fourier: RealFn = Arc::new(fourier);
        let mut tf = TestFunction {
            beta,
            fourier,
            physical: None,
            at_zero: 0.0,
            label: label.into(),
        };
        tf.at_zero = tf.inverse_transform(0.0)?;
        Ok(tf)
    }

    /// A test function with both sides known in closed form.
    pub fn from_parts<F, G>(beta: f64, fourier: F, physical: G, label: impl Into<String>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mut tf = Self::from_fourier(beta, fourier, label)?;
        let at_zero = physical(0.0);
        if (at_zero - tf.at_zero).abs() > 1e-9 * (1.0 + at_zero.abs()) {
            return Err(Error::Domain(format!(
                "phi(0) = {at_zero} disagrees with the integral of the transform {}",
                tf.at_zero
            )));
        }
        tf.at_zero = at_zero;
        tf.physical = Some(Arc::new(physical));
        Ok(tf)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `phi^(u)`; zero outside the support.
    #[inline]
    pub fn fourier(&self, u: f64) -> f64 {
        if u.abs() > self.beta {
            0.0
        } else {
            (self.fourier)(u)
        }
    }

    /// `phi(0) = int phi^`.
    pub fn value_at_zero(&self) -> f64 {
        self.at_zero
    }

    /// `phi(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        match &self.physical {
            Some(f) => Ok(f(x)),
            None => self.inverse_transform(x),
        }
    }

    fn inverse_transform(&self, x: f64) -> Result<f64> {
        let cub = Cubature::new(12, 1e-13, 100_000);
        let half = cub.integrate_1d(|u| self.fourier(u) * (2.0 * PI * x * u).cos(), 0.0, self.beta, &[])?;
        Ok(2.0 * half.value)
    }

    /// The periodization `sum_k phi(x + k L)`, by Poisson summation as the
    /// finite Fourier series `(1/L) sum_m phi^(m/L) cos(2 pi m x / L)`.
    pub fn eval_periodic(&self, x: f64, period: f64) -> f64 {
        let m_max = (self.beta * period).floor() as usize;
        let theta = 2.0 * PI * x / period;
        let c1 = theta.cos();
        // Chebyshev recurrence for cos(m theta).
        let (mut prev, mut cur) = (1.0, c1);
        let mut acc = self.fourier(0.0);
        for m in 1..=m_max {
            acc += 2.0 * self.fourier(m as f64 / period) * cur;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
        acc / period
    }

    /// True when both handles share the same transform closure, so that
    /// caches may treat them as one function.
    pub fn same_as(&self, other: &TestFunction) -> bool {
        self.beta == other.beta && Arc::ptr_eq(&self.fourier, &other.fourier)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fejer_basics() {
        let f = TestFunction::fejer(0.9).unwrap();
        assert_eq!(f.fourier(0.0), 1.0);
        assert_eq!(f.value_at_zero(), 0.9);
        assert_eq!(f.eval(0.0).unwrap(), 0.9);
        assert_eq!(f.fourier(0.9), 0.0);
        assert_eq!(f.fourier(0.95), 0.0);
        assert!(f.fourier(0.899) > 0.0);
        assert!(TestFunction::fejer(0.0).is_err());
    }

    #[test]
    fn fejer_physical_matches_inverse_transform() {
        let f = TestFunction::fejer(0.7).unwrap();
        for x in [0.0, 0.3, 1.1, 2.5, 7.0] {
            let direct = f.eval(x).unwrap();
            let numeric = f.inverse_transform(x).unwrap();
            assert!((direct - numeric).abs() < 1e-12, "x={x}: {direct} vs {numeric}");
            assert!(direct >= 0.0);
            assert_eq!(direct, f.eval(-x).unwrap());
        }
    }

    #[test]
    fn custom_transform() {
        let beta = 0.5;
        let g = TestFunction::from_fourier(beta, move |u: f64| (1.0 - (u / beta).powi(2)).max(0.0), "bump").unwrap();
        assert!((g.value_at_zero() - 4.0 * beta / 3.0).abs() < 1e-12);
        assert!(TestFunction::from_fourier(0.5, |u: f64| u, "odd").is_err());
        assert!(TestFunction::from_fourier(0.5, |_| 1.0, "wide").is_err());
    }

    #[test]
    fn periodization_matches_direct_sum() {
        let f = TestFunction::fejer(0.9).unwrap();
        let period = 13.0;
        for x in [0.0, 0.4, 3.3, 6.5] {
            let direct: f64 = (-20000i64..=20000)
                .map(|k| f.eval(x + k as f64 * period).unwrap())
                .sum();
            let fast = f.eval_periodic(x, period);
            assert!((direct - fast).abs() < 1e-5, "x={x}: {direct} vs {fast}");
        }
    }
}
