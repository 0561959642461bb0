use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{EnsembleSpec, Group};
use crate::error::{Error, Result};
use crate::stream;

/// Attempts allowed for landing in the determinant-one component.
pub const MAX_REJECTIONS: usize = 64;

/// A sampled group element.
#[derive(Debug, Clone, PartialEq)]
pub enum HaarMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl HaarMatrix {
    pub fn dim(&self) -> usize {
        match self {
            HaarMatrix::Real(m) => m.nrows(),
            HaarMatrix::Complex(m) => m.nrows(),
        }
    }
}

/// The concrete group a sample index draws from; `O` alternates between
/// `SO(2N)` on even indices and `SO(2N+1)` on odd ones.
pub fn concrete_group(group: Group, index: u64) -> Group {
    match group {
        Group::O if index.is_multiple_of(2) => Group::SOeven,
        Group::O => Group::SOodd,
        g => g,
    }
}

fn group_tag(g: Group) -> u64 {
    match g {
        Group::SOeven => 1,
        Group::SOodd => 2,
        Group::USp => 3,
        Group::U => 4,
        Group::O => 5,
    }
}

/// Sample `index` of the ensemble.
pub fn haar_sample(spec: &EnsembleSpec, index: u64) -> Result<HaarMatrix> {
    if index >= spec.samples as u64 {
        return Err(Error::Sampling {
            index,
            reason: format!("index beyond the {} configured samples", spec.samples),
        });
    }
    let domain = stream::domain::ENSEMBLE ^ (group_tag(spec.group) << 8) ^ ((spec.size as u64) << 16);
    let mut rng = stream::substream(spec.seed, domain, index);
    let n = spec.size;
    match concrete_group(spec.group, index) {
        Group::SOeven => special_orthogonal(2 * n, &mut rng, index).map(HaarMatrix::Real),
        Group::SOodd => special_orthogonal(2 * n + 1, &mut rng, index).map(HaarMatrix::Real),
        Group::U => Ok(HaarMatrix::Complex(unitary(n, &mut rng))),
        Group::USp => Ok(HaarMatrix::Complex(unitary_symplectic(n, &mut rng))),
        Group::O => unreachable!("resolved by concrete_group"),
    }
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(s * gaussian(rng), s * gaussian(rng))
}

/// Haar on `O(d)`: QR of a Gaussian matrix with the signs of `diag(R)`
/// moved into `Q`.
fn orthogonal<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let z = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn special_orthogonal<R: Rng>(d: usize, rng: &mut R, index: u64) -> Result<DMatrix<f64>> {
    for _ in 0..MAX_REJECTIONS {
        let q = orthogonal(d, rng);
        if q.determinant() > 0.0 {
            return Ok(q);
        }
    }
    Err(Error::Sampling {
        index,
        reason: format!("no determinant-one draw in {MAX_REJECTIONS} attempts"),
    })
}

fn unitary<R: Rng>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let norm = rjj.norm();
        if norm > 0.0 {
            let phase = rjj / norm;
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// `J v` for the standard form `J = [[0, I], [-I, 0]]`.
fn apply_j(v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len() / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for i in 0..n {
        out[i] = v[n + i];
        out[n + i] = -v[i];
    }
    out
}

fn project_out(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for b in basis {
        let c: Complex64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
        for (vi, bi) in v.iter_mut().zip(b) {
            *vi -= c * bi;
        }
    }
}

/// Haar on `USp(2N)` by Gram-Schmidt in the quaternionic sense: each new
/// Gaussian column `u` is orthogonalized against the previous `u_j` and their
/// partners `-J conj(u_j)`; the partner of `u` completes the pair.
fn unitary_symplectic<R: Rng>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let d = 2 * n;
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    let mut firsts = Vec::with_capacity(n);
    let mut seconds = Vec::with_capacity(n);
    for _ in 0..n {
        let mut v: Vec<Complex64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        // Two passes keep the columns orthonormal to working precision.
        project_out(&mut v, &basis);
        project_out(&mut v, &basis);
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut v {
            *z /= norm;
        }
        let conj: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
        let partner: Vec<Complex64> = apply_j(&conj).into_iter().map(|z| -z).collect();
        basis.push(v.clone());
        basis.push(partner.clone());
        firsts.push(v);
        seconds.push(partner);
    }
    DMatrix::from_fn(d, d, |i, j| if j < n { firsts[j][i] } else { seconds[j - n][i] })
}

/// `max |M^* M - I|`, plus `max |M^T J M - J|` for symplectic samples.
pub fn membership_residual(m: &HaarMatrix, group: Group) -> f64 {
    match m {
        HaarMatrix::Real(q) => {
            let d = q.nrows();
            (q.transpose() * q - DMatrix::<f64>::identity(d, d)).amax()
        }
        HaarMatrix::Complex(u) => {
            let d = u.nrows();
            let unitary = (u.adjoint() * u - DMatrix::<Complex64>::identity(d, d))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            if group != Group::USp {
                return unitary;
            }
            let n = d / 2;
            let j = DMatrix::from_fn(d, d, |a, b| {
                if b == a + n {
                    Complex64::new(1.0, 0.0)
                } else if a == b + n {
                    Complex64::new(-1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let symplectic = (u.transpose() * &j * u - &j).iter().map(|z| z.norm()).fold(0.0, f64::max);
            unitary.max(symplectic)
        }
    }
}
