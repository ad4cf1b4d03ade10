//! Numerical rank estimation for large symmetric positive semidefinite
//! matrices, using only matrix-vector products.
//!
//! The rank is read off an approximate spectral density (DOS): a threshold
//! `eps` is placed in the gap that separates noise eigenvalues from relevant
//! ones, and the eigenvalues above it are counted. Two estimators are
//! provided:
//!
//! * [`kpm`]: Chebyshev moments with Jackson or Lanczos-sigma damping;
//! * [`ldos`]: Gauss quadrature from short Lanczos runs.
//!
//! Both average over random probe vectors ([`probe`]) and share the
//! threshold rules in [`threshold`]. [`oracle`] computes exact spectra of
//! dense matrices for validation and [`gen`] builds test matrices with known
//! rank.
//!
//! ```
//! use specrank::{gen, ldos, probe};
//!
//! let m = gen::planted_spectrum((0..400).map(|i| if i < 40 { 1.0 + i as f64 * 0.01 } else { 0.0 }).collect(), true, 1)?;
//! let probes = probe::generate_probes(400, &probe::ProbeConfig::default())?;
//! let est = ldos::estimate_rank_lanczos(&m.operator, &probes, &ldos::LanczosOptions::default(), None)?;
//! assert!((est.mean - 40.0).abs() < 4.0);
//! # Ok::<(), specrank::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dos;
pub mod error;
pub mod estimate;
pub mod gen;
pub mod io;
pub mod kpm;
pub mod lanczos;
pub mod ldos;
pub mod linops;
pub mod oracle;
pub mod probe;
pub mod threshold;

pub use dos::{DosCurve, DosMeta, DosMethod};
pub use error::{Error, Result};
pub use estimate::{EstimatorKind, PhaseTimings, RankEstimate};
pub use kpm::{DampingKind, KpmOptions};
pub use lanczos::{Reorthogonalization, RitzSpectrum, TridiagonalMatrix};
pub use ldos::{LanczosOptions, RitzData};
pub use linops::{CsrMatrix, DenseMatrix, Factor, GramSide, LinearOperator, SymmetricOperator, Window};
pub use oracle::ExactSpectrum;
pub use probe::{ProbeConfig, ProbeDistribution, SampleSeries};
pub use threshold::{ThresholdMethod, ThresholdOptions, ThresholdResult, ThresholdStrategy};
