use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |H - H^dagger| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("propagator is not unitary (max |U^dagger U - I| = {defect:e})")]
    NonUnitary { defect: f64 },

    #[error("rotation axis must be a unit vector (norm {norm})")]
    InvalidAxis { norm: f64 },

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("{kind} requires a pulse count divisible by {block}, got {pulses}")]
    BlockDivisibility {
        kind: &'static str,
        block: usize,
        pulses: usize,
    },

    #[error("pulse count must be at least 1")]
    NoPulses,

    #[error("pulses overlap: pulse duration {t_pi:e} s exceeds interpulse delay {tau:e} s")]
    PulseOverlap { t_pi: f64, tau: f64 },

    #[error("time step {dt:e} s is too coarse; at most {max:e} s allowed")]
    StepTooCoarse { dt: f64, max: f64 },

    #[error("coupling too strong for the weak-coupling extraction: theta_eff = {theta} > {max}")]
    CouplingTooStrong { theta: f64, max: f64 },

    #[error("odd resonance order required, got {0}")]
    EvenOrder(u32),

    #[error("invalid harmonic ratio {0}")]
    InvalidHarmonic(String),

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("instant pulses are applied as unitaries and have no Hamiltonian")]
    InstantPulseHamiltonian,

    #[error("the quantum engine needs a quantum signal")]
    EngineSignalMismatch,

    #[error("isotope database line {line}: {message}")]
    IsotopeParse { line: usize, message: String },

    #[error("unknown isotope {0}")]
    UnknownIsotope(String),
}

pub type Result<T> = std::result::Result<T, Error>;
