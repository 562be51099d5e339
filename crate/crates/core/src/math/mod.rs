//! Dense complex matrices, spin operators, and Bloch-sphere rotations.

pub mod cmatrix;
pub mod rotation;
pub mod spin;

pub use cmatrix::{herm_expm, kron, CMatrix, HermitianEigen, C64};
pub use rotation::{compose_rotations, AxisAngle, Rotation3, Vec3};
pub use spin::{SpinOperators, SpinSpecies};
