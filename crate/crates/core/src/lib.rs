//! Identification and quantification of non-Markovian open-system dynamics
//! through non-completely-positive intermediate maps.
//!
//! - [`matcore`]: dense complex linear algebra, density matrices.
//! - [`procrep`]: chi / Choi / superoperator representations of channels.
//! - [`sdp`]: small dense interior-point SDP solver.
//! - [`capability`]: robustness of non-CP intermediate maps and the witness kernel.
//! - [`catalog`]: named polarization states and witness state-pair catalogs.
//! - [`dephasing`]: single- and two-photon dephasing models.
//! - [`measures`]: N_beta, BLP and RHP measures over a dynamics family.
//! - [`tomo`]: simulated state and process tomography.
//! - [`fitkit`]: Levenberg-Marquardt fits for spectra and trace-distance curves.
//! - [`randgen`]: seeded random states, channels and non-CP maps.

#![forbid(unsafe_code)]

pub mod capability;
pub mod catalog;
pub mod dephasing;
pub mod error;
pub mod fitkit;
pub mod matcore;
pub mod measures;
pub mod procrep;
pub mod randgen;
pub mod sdp;
pub mod tomo;

pub use error::{Error, Result};
pub use matcore::{ComplexMatrix, DensityMatrix, ToleranceProfile, C64};
pub use procrep::{BasisLabel, CpReport, OperatorBasis, ProcessRep};
