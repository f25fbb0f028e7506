//! Adaptive mixed finite elements in 2D that control the error in the
//! natural `H(div) x L^2` norm.
//!
//! The crate covers the whole pipeline of an adaptive mixed method:
//!
//! * [`mesh`]: conforming triangulations refined by newest vertex bisection,
//! * [`elements`]: Raviart-Thomas / BDM reference elements and quadrature,
//! * [`assembly`]: saddle-point systems for mixed Poisson and the
//!   pseudostress-velocity Stokes problem,
//! * [`linsolve`]: sparse direct and MINRES solvers, plus an inf-sup probe,
//! * [`estimator`]: residual indicators controlling the natural-norm error,
//! * [`adapt`]: Dörfler marking, data pre-approximation and the adaptive loops,
//! * [`bench`] and [`cli`]: built-in benchmark problems and the experiment driver.

pub mod adapt;
pub mod assembly;
pub mod bench;
pub mod cli;
pub mod elements;
pub mod error;
pub mod estimator;
pub mod fields;
pub mod linsolve;
pub mod mesh;
pub mod norms;
pub mod quadrature;
pub mod sparse;

pub use error::{Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];
