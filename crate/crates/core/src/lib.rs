//! Sparse Fock-space simulation of teleportation-based photon-number
//! manipulation.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`] holds the sparse multimode state carrier.
//! * [`optics`] builds mode unitaries out of beam splitters and phase
//!   shifters and applies them exactly to Fock states.
//! * [`resources`] constructs the entangled two-mode resources (squeezed
//!   vacua, number-phase Bell states and their generalisations).
//! * [`bell`] simulates number-sum Bell measurements, both as ideal
//!   projectors and as post-selected linear-optical detectors.
//! * [`design`] searches for linear-optical detector parameters.
//! * [`teleport`] runs teleportation steps and composite pipelines with a
//!   ledger of success probabilities.
//!
//! All state-level code is generic over the scalar type through [`Real`];
//! the aliases below fix it to `f64` (or `f32`) for everyday use.

pub mod bell;
pub mod design;
mod error;
pub mod fock;
pub mod optics;
mod real;
pub mod resources;
pub mod sigfig;
pub mod teleport;

pub use error::{Error, Result};
pub use real::Real;

/// Complex amplitude over the scalar type `T`.
pub type Complex<T> = num_complex::Complex<T>;

pub type State = fock::PureState<f64>;
pub type StateF32 = fock::PureState<f32>;
pub type Unitary = optics::ModeUnitary<f64>;
pub type UnitaryF32 = optics::ModeUnitary<f32>;
pub type BeamSplitter = optics::BeamSplitterSpec<f64>;
pub type Detector = bell::DetectorDesign<f64>;
pub type Model = bell::SuccessModel<f64>;
pub type Step = teleport::ManipulationStep<f64>;
pub type Pipeline = teleport::Pipeline<f64>;
pub type PipelineOutcome = teleport::PipelineResult<f64>;
