//! Numerics for the damped fractional Klein-Gordon equation
//! `u'' + γ(x) u' + (-Δ+1)^{s/2} u = 0` on a periodic box.
//!
//! The crate is `no_std` (it needs `alloc`). Everything runs on a
//! [`TorusGrid`]: a uniform periodic lattice of side `box_len` that stands in
//! for the whole space, together with its dual frequency lattice. Functions of
//! `-Δ` are Fourier multipliers applied through a radix-2 FFT with unitary
//! normalization.
//!
//! Module map:
//!
//! * [`grid`], [`field`], [`symbol`]: lattice, fields, multipliers, band and
//!   annulus projections, energy-space norms.
//! * [`damping`]: damping profiles and their geometry (thickness, 1-D
//!   geometric control, essential infimum).
//! * [`uncertainty`]: spectral-inequality constants for band-limited
//!   functions and the smallest eigenvalue of the resolvent quadratic form.
//! * [`operator`]: the first-order generator, its `w`-diagonalization and
//!   resolvent singular values along the imaginary axis.
//! * [`evolution`]: exact-flow Strang splitting, energy traces, smoothed data.
//! * [`decay`]: exponential / polynomial / logarithmic decay classification.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod damping;
pub mod decay;
pub mod eigen;
pub mod error;
pub mod evolution;
pub mod fft;
pub mod field;
pub mod grid;
pub mod operator;
pub mod random;
pub mod symbol;
pub mod uncertainty;

pub use damping::{DampingFamily, DampingProfile, ThickCertificate};
pub use decay::{DecayModel, DecayReport};
pub use error::{Error, Result};
pub use evolution::EnergyTrace;
pub use field::SpectralField;
pub use grid::TorusGrid;
pub use operator::{StateVector, WPair};
pub use symbol::{AnnulusSpec, FracSymbol, SymbolRole};
pub use uncertainty::Envelope;

/// Complex scalar used for every field sample and Fourier coefficient.
pub type C64 = num_complex::Complex<f64>;
