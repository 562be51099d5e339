//! Shared fixtures for the criterion benchmarks in `benches/`.

use spurious_core::analysis::sweep::SweepSetup;
use spurious_core::model::units::{khz_to_rad_s, mhz_to_rad_s};
use spurious_core::{
    build_timeline, ClassicalSignal, Engine, NuclearSpin, PulseMode, QuantumSignal, SensorSpec,
    SequenceKind, SequenceSpec, SequenceTimeline, Signal,
};

/// 20 MHz Rabi frequency, no detuning.
pub fn sensor() -> SensorSpec {
    SensorSpec::new(0.0, mhz_to_rad_s(20.0)).expect("valid sensor")
}

/// Spin-1/2 nucleus precessing at 2 MHz with a⊥/2π = 400 kHz.
pub fn nucleus() -> QuantumSignal {
    QuantumSignal::new(
        khz_to_rad_s(400.0),
        0.0,
        mhz_to_rad_s(2.0),
        1.0,
        NuclearSpin::Half,
    )
    .expect("valid nucleus")
}

pub fn classical() -> ClassicalSignal {
    ClassicalSignal::new(khz_to_rad_s(200.0), 2e6, 0.3).expect("valid signal")
}

pub fn timeline(kind: SequenceKind, pulses: usize, f: f64, mode: PulseMode) -> SequenceTimeline {
    let spec = SequenceSpec::new(kind, pulses, 1.0 / (2.0 * f), mode).expect("valid sequence");
    build_timeline(&spec, &sensor()).expect("pulses fit")
}

pub fn spectrum_setup(kind: SequenceKind, pulses: usize) -> SweepSetup {
    SweepSetup {
        kind,
        pulses,
        mode: PulseMode::Finite,
        sensor: sensor(),
        signal: Signal::Quantum(nucleus()),
        engine: Engine::Quantum,
    }
}
