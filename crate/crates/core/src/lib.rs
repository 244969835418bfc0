//! Dense truncated-Fock-space simulation of finite-energy GKP codes.
//!
//! The crate provides the building blocks for preparing GKP magic states with
//! the Kerr unitary `exp(i pi n^2 / 8)` and studying them under photon loss:
//!
//! - [`fock`]: operators and states on a truncated Fock space, matrix
//!   exponentials, displacement operators, ancilla-oscillator hybrid states
//!   and Wigner functions.
//! - [`gkp`]: square-lattice GKP codes with envelope `exp(-Delta^2 n)`,
//!   codewords, stabilizers and logical states.
//! - [`gates`]: the Kerr unitary, Fourier gate, cubic comparison gate and
//!   the 2x2 logical targets.
//! - [`evolution`]: Lindblad master equation with photon loss (and optional
//!   dephasing) plus an independent quantum-jump trajectory oracle.
//! - [`sbs`]: the small-Big-small error-correction round as a four-outcome
//!   Kraus channel, with measurement-error modelling and post-selection.
//! - [`decoders`]: the perfect-error-detection logical map and the
//!   subsystem (SBS-basis) trace-out decoder.
//!
//! Conventions used throughout: `hbar = 1`, `q = (a + a^dag)/sqrt(2)`,
//! `p = i (a^dag - a)/sqrt(2)`, so `[q, p] = i` and `D(alpha)` shifts `q` by
//! `sqrt(2) Re alpha` and `p` by `sqrt(2) Im alpha`. Wigner functions are
//! normalized so that the grid integral over `dq dp` is 1 (vacuum peak
//! `1/pi`).
//!
//! All operators and states are immutable after construction and safe to
//! share across threads. With the default `parallel` feature, embarrassingly
//! parallel loops (Wigner grids, Monte Carlo trajectories) fan out over a
//! rayon pool; disabling the feature falls back to sequential execution with
//! identical results.

pub mod decoders;
pub mod error;
pub mod evolution;
pub mod fock;
pub mod gates;
pub mod gkp;
pub mod par;
pub mod sbs;

pub use error::{CoreError, Result};
pub use fock::{FockOperator, HybridState, OscillatorState};
pub use gkp::GkpCode;

/// Complex scalar used for all amplitudes and matrix entries.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix backing operators and density matrices.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Dense complex vector backing kets.
pub type CVector = nalgebra::DVector<C64>;
