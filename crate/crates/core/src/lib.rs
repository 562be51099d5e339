//! Simulation and analysis of spurious harmonic response in multipulse
//! quantum sensing (CPMG and the XY family).
//!
//! The crate is organised bottom-up: [`math`] provides matrices and rotations,
//! [`model`] and [`sequences`] describe an experiment, [`propagator`] evolves
//! it, [`bloch`] holds the closed-form single-block picture, [`analysis`] runs
//! sweeps and extracts harmonics, and [`isotopes`] looks for ambiguous
//! isotope assignments.

pub mod analysis;
pub mod bloch;
pub mod error;
pub mod isotopes;
pub mod math;
pub mod model;
pub mod propagator;
pub mod sequences;

pub use error::{Error, Result};
pub use math::{
    compose_rotations, herm_expm, kron, CMatrix, Rotation3, SpinOperators, SpinSpecies,
};
pub use model::{
    quantum_to_classical, tau_for_frequency, units, ClassicalSignal, Harmonic, NuclearSpin,
    PulseMode, QuantumSignal, SensorSpec, SequenceKind, SequenceSpec, Signal,
};
pub use propagator::{
    evolve_classical, evolve_quantum, simulate, Engine, MeasurementProtocol, SimResult,
};
pub use sequences::{build_timeline, phase_pattern, Segment, SequenceTimeline};
