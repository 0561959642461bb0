//! Numerical toolkit for vertical Sato-Tate measures on GSp(4) Hecke data,
//! spinor and standard Euler factors, Katz-Sarnak n-level densities,
//! classical compact group ensembles, synthetic families and paramodular
//! dimension arithmetic.

pub mod arith;
pub mod error;
pub mod family;
pub mod hecke;
pub mod kernels;
pub mod measures;
pub mod paramodular;
pub mod quadrature;
pub mod rmt;
pub mod sign;
pub mod stream;

pub use arith::Prime;
pub use error::{Error, Result};
pub use family::{EpsilonRule, Family, FamilySpec, SyntheticForm};
pub use hecke::{CoeffTable, EulerFactor, FormShape, LKind, SpinSatake};
pub use kernels::{PredictionConfig, PredictionReport, SymmetryType, TestFunction};
pub use measures::{MeasureKind, MeasureSpec, SatakePoint};
pub use paramodular::{LevelData, TraceTable};
pub use quadrature::{Cubature, Integral, Rect};
pub use rmt::{EnsembleReport, EnsembleSpec, Group};
pub use sign::Sign;
