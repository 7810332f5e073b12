//! Selective control of the symmetric Dicke subspace of a trapped-ion chain.
//!
//! The crate models `N` two-level ions sharing a center-of-mass phonon mode,
//! driven by a Raman blue (or red) sideband whose motion-dependent AC Stark
//! shift makes exactly one `{|n⟩|D_k⟩, |n+1⟩|D_{k+1}⟩}` doublet resonant.
//!
//! Layout:
//! - [`spaces`]: bases, Dicke states, collective operators, collective number states.
//! - [`hamiltonians`]: Stark shift, effective and interaction-picture Hamiltonians, resonance tuning.
//! - [`dynamics`]: exact and integrated time evolution, frames, ancilla measurement.
//! - [`protocols`]: pulse schedules (W state, Dicke ladder, discrimination) and their compiler.
//! - [`analysis`]: fidelities, Rabi traces, leakage, selectivity sweeps, timescales.
//! - [`dsl`], [`plot`], [`cli`]: schedule files, SVG output and the `dicke` command.
//!
//! Units: `ħ = 1`, frequencies are angular and, unless stated otherwise,
//! measured in units of `|Ω_eff|`.

pub mod analysis;
pub mod basis;
pub mod cli;
pub mod config;
pub mod dsl;
pub mod dynamics;
pub mod error;
pub mod hamiltonians;
pub mod plot;
pub mod protocols;
pub mod spaces;

pub use basis::{BasisKind, BasisTag, OperatorMatrix, StateVector};
pub use config::{ConfigSpec, IonChainConfig};
pub use error::{Error, Result};
pub use hamiltonians::{DoubletTarget, Sideband};

pub use num_complex::Complex64;
