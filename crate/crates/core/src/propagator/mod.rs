//! Time evolution through a sequence timeline.
//!
//! Two engines share one measurement protocol: [`quantum`] propagates the
//! sensor together with a nuclear spin exactly, [`classical`] drives the bare
//! sensor with a classical ac field.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Rotation3, Vec3};
use crate::model::{SensorSpec, Signal};
use crate::sequences::SequenceTimeline;

pub mod classical;
pub mod quantum;

pub use classical::{default_dt, evolve_classical, sensor_rotation};
pub use quantum::{evolve_quantum, segment_hamiltonian};

/// Largest tolerated `|U^dagger U - I|` for a segment propagator.
pub const UNITARITY_ABORT: f64 = 1e-8;

/// Sensor starts in |0⟩ (Bloch +z); ideal π/2 about +y prepares +x, ideal
/// π/2 about −y maps +x back to |0⟩ before readout. The nucleus starts
/// maximally mixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementProtocol {
    pub preparation: Rotation3,
    pub readout: Rotation3,
}

impl Default for MeasurementProtocol {
    fn default() -> Self {
        MeasurementProtocol {
            preparation: Rotation3::about_y(FRAC_PI_2),
            readout: Rotation3::about_y(-FRAC_PI_2),
        }
    }
}

impl MeasurementProtocol {
    /// Flip probability for a sensor-only rotation `u`.
    pub fn probability(&self, u: &Rotation3) -> f64 {
        let v = self
            .preparation
            .then(u)
            .then(&self.readout)
            .apply([0.0, 0.0, 1.0]);
        (0.5 * (1.0 - v[2])).clamp(0.0, 1.0)
    }

    /// Bloch vector just before the readout pulse.
    pub fn before_readout(&self, u: &Rotation3) -> Vec3 {
        self.preparation.then(u).apply([0.0, 0.0, 1.0])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub p: f64,
    /// Equatorial phase of the sensor before readout, one entry per initial
    /// nuclear Iz eigenstate (a single entry for the classical engine).
    pub conditional_phases: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "lowercase")]
pub enum Engine {
    Quantum,
    /// `dt = None` picks the coarsest admissible step.
    Classical {
        dt: Option<f64>,
    },
}

impl Engine {
    pub fn classical() -> Self {
        Engine::Classical { dt: None }
    }
}

/// Runs `tl` with the requested engine.
pub fn simulate(
    tl: &SequenceTimeline,
    sensor: &SensorSpec,
    signal: &Signal,
    engine: Engine,
) -> Result<SimResult> {
    let proto = MeasurementProtocol::default();
    match (engine, signal) {
        (Engine::Quantum, Signal::Quantum(q)) => evolve_quantum(tl, sensor, q, &proto),
        (Engine::Quantum, Signal::Classical(_)) => Err(Error::EngineSignalMismatch),
        (Engine::Classical { dt }, s) => {
            let c = s.as_classical();
            let dt = dt.unwrap_or_else(|| default_dt(sensor, &c));
            evolve_classical(tl, sensor, &c, dt, &proto)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_calibration() {
        let proto = MeasurementProtocol::default();
        assert!(proto.probability(&Rotation3::IDENTITY) < 1e-15);
        let v = proto.before_readout(&Rotation3::IDENTITY);
        assert!((v[0] - 1.0).abs() < 1e-15);
        // a π/2 phase error leaves the sensor on the equator: p = 1/2
        assert!((proto.probability(&Rotation3::about_z(FRAC_PI_2)) - 0.5).abs() < 1e-15);
        assert!((proto.probability(&Rotation3::about_z(std::f64::consts::PI)) - 1.0).abs() < 1e-15);
    }
}
