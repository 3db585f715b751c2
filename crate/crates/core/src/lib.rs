//! Numerical engine for fractional seminorms of smooth, rapidly decaying functions.
//!
//! The crate evaluates the Gagliardo seminorm `[f]_{W^s_{p,q}}`, the harmonic-extension
//! seminorm `[f]_{E^s_{p,q}}` (and its mixed square-function form), and discrete and
//! continuous Triebel-Lizorkin seminorms `[f]_{F^s_{p,q}}` on uniform periodic grids.
//! Closed-form Fourier-side values at `p = q = 2` live in [`oracle`]; parameter scans that
//! turn two-sided inequalities into bounded-ratio checks live in [`experiments`].

pub mod cli;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod oracle;
pub mod quadrature;
pub mod report;
pub mod seminorms;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{GridSpec, SampledFunction, TestFunction};
pub use quadrature::QuadratureSpec;
pub use report::{RatioReport, RatioRow, Verdict};
pub use seminorms::{SeminormEngine, SeminormParams, SeminormValue};
pub use spectral::{Kernel, MultiplierKind};
