//! Sensor-only evolution under a classical ac field.
//!
//! During free segments every term commutes with Sz, so the accumulated
//! phase is integrated in closed form. Pulses are stepped with midpoint
//! sampling of the field.

use crate::error::{Error, Result};
use crate::math::Rotation3;
use crate::model::{ClassicalSignal, SensorSpec};
use crate::sequences::{Segment, SequenceTimeline};

use super::{MeasurementProtocol, SimResult};

/// Steps per shortest time scale.
pub const STEPS_PER_SCALE: f64 = 200.0;

/// Coarsest admissible step: `min(t_π, 1/f_ac) / 200`.
pub fn default_dt(sensor: &SensorSpec, sig: &ClassicalSignal) -> f64 {
    sensor.t_pi().min(1.0 / sig.f_ac) / STEPS_PER_SCALE
}

/// Phase `∫ (Δω + ω_ac cos(Ωt + φ₀)) dt` over `[t0, t0 + d]`.
fn free_phase(sensor: &SensorSpec, sig: &ClassicalSignal, t0: f64, d: f64) -> f64 {
    let om = sig.omega();
    let ac = if sig.amplitude == 0.0 {
        0.0
    } else {
        sig.amplitude / om * ((om * (t0 + d) + sig.phase).sin() - (om * t0 + sig.phase).sin())
    };
    sensor.detuning * d + ac
}

/// Net sensor rotation over the whole timeline.
pub fn sensor_rotation(
    tl: &SequenceTimeline,
    sensor: &SensorSpec,
    sig: &ClassicalSignal,
    dt: f64,
) -> Result<Rotation3> {
    let max = default_dt(sensor, sig);
    if !(dt > 0.0) || dt > max * (1.0 + 1e-12) {
        return Err(Error::StepTooCoarse { dt, max });
    }
    let mut u = Rotation3::IDENTITY;
    for (seg, t0) in tl.segments.iter().zip(tl.start_times()) {
        match *seg {
            Segment::Free { duration } => {
                u = u.then(&Rotation3::about_z(free_phase(sensor, sig, t0, duration)));
            }
            Segment::InstantPulse { phase, angle } => {
                u = u.then(&Rotation3::about([phase.cos(), phase.sin(), 0.0], angle));
            }
            Segment::Pulse { duration, phase } => {
                let steps = (duration / dt - 1e-9).ceil().max(1.0) as usize;
                let h = duration / steps as f64;
                let (bx, by) = (sensor.rabi * phase.cos(), sensor.rabi * phase.sin());
                for i in 0..steps {
                    let tm = t0 + (i as f64 + 0.5) * h;
                    let bz = sensor.detuning + sig.at(tm);
                    u = u.then(&Rotation3::precession([bx, by, bz], h));
                }
                u = u.renormalized();
            }
        }
    }
    Ok(u)
}

/// Classical-field evolution with step `dt` inside pulses.
pub fn evolve_classical(
    tl: &SequenceTimeline,
    sensor: &SensorSpec,
    sig: &ClassicalSignal,
    dt: f64,
    proto: &MeasurementProtocol,
) -> Result<SimResult> {
    let u = sensor_rotation(tl, sensor, sig, dt)?;
    let v = proto.before_readout(&u);
    Ok(SimResult {
        p: proto.probability(&u),
        conditional_phases: vec![v[1].atan2(v[0])],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{units, PulseMode, SequenceKind, SequenceSpec};
    use crate::sequences::build_timeline;
    use std::f64::consts::PI;

    fn sensor(dw_mhz: f64) -> SensorSpec {
        SensorSpec::new(units::mhz_to_rad_s(dw_mhz), units::mhz_to_rad_s(20.0)).unwrap()
    }

    fn run(
        kind: SequenceKind,
        n: usize,
        f: f64,
        mode: PulseMode,
        s: &SensorSpec,
        sig: &ClassicalSignal,
        dt: f64,
    ) -> f64 {
        let seq = SequenceSpec::new(kind, n, 1.0 / (2.0 * f), mode).unwrap();
        let tl = build_timeline(&seq, s).unwrap();
        evolve_classical(&tl, s, sig, dt, &MeasurementProtocol::default())
            .unwrap()
            .p
    }

    #[test]
    fn zero_signal_is_dark() {
        let s = sensor(0.0);
        let sig = ClassicalSignal::new(0.0, 2e6, 0.3).unwrap();
        for kind in SequenceKind::ALL {
            for mode in [PulseMode::Ideal, PulseMode::Finite] {
                let p = run(
                    kind,
                    16 * kind.block_len(),
                    3.1e6,
                    mode,
                    &s,
                    &sig,
                    default_dt(&s, &sig),
                );
                assert!(p < 1e-10, "{kind} {mode:?} {p}");
            }
        }
    }

    #[test]
    fn coarse_step_rejected() {
        let s = sensor(0.0);
        let sig = ClassicalSignal::new(1.0, 2e6, 0.0).unwrap();
        let tl = build_timeline(
            &SequenceSpec::new(SequenceKind::Xy4, 4, 250e-9, PulseMode::Finite).unwrap(),
            &s,
        )
        .unwrap();
        let dt = 2.0 * default_dt(&s, &sig);
        assert!(matches!(
            sensor_rotation(&tl, &s, &sig, dt),
            Err(Error::StepTooCoarse { .. })
        ));
    }

    #[test]
    fn free_phase_matches_quadrature() {
        let s = sensor(0.7);
        let sig = ClassicalSignal::new(units::khz_to_rad_s(300.0), 2e6, 0.4).unwrap();
        let (t0, d) = (130e-9, 410e-9);
        let n = 200_000;
        let h = d / n as f64;
        let quad: f64 = (0..n)
            .map(|i| (s.detuning + sig.at(t0 + (i as f64 + 0.5) * h)) * h)
            .sum();
        assert!((free_phase(&s, &sig, t0, d) - quad).abs() < 1e-9);
    }

    #[test]
    fn fundamental_ideal_matches_filter_phase() {
        // ideal CPMG at f = f_ac, φ₀ = 0: each interval collects 2ω_ac/Ω
        let s = sensor(0.0);
        let amp = units::khz_to_rad_s(5.0);
        let sig = ClassicalSignal::new(amp, 2e6, 0.0).unwrap();
        let n = 8;
        let phi = n as f64 * 2.0 * amp / sig.omega();
        let p = run(
            SequenceKind::Cpmg,
            n,
            2e6,
            PulseMode::Ideal,
            &s,
            &sig,
            default_dt(&s, &sig),
        );
        assert!((p - (phi / 2.0).sin().powi(2)).abs() < 1e-12, "{p}");
    }

    #[test]
    fn step_halving_converges() {
        let s = sensor(0.0);
        let sig = ClassicalSignal::new(units::khz_to_rad_s(200.0), 2e6, 0.3).unwrap();
        let dt = default_dt(&s, &sig);
        let a = run(SequenceKind::Xy4, 480, 4e6, PulseMode::Finite, &s, &sig, dt);
        let b = run(
            SequenceKind::Xy4,
            480,
            4e6,
            PulseMode::Finite,
            &s,
            &sig,
            dt / 2.0,
        );
        assert!((a - b).abs() < 1e-6, "{a} {b}");
    }

    #[test]
    fn ideal_pulse_angle_is_pi() {
        let s = sensor(0.0);
        let sig = ClassicalSignal::new(0.0, 2e6, 0.0).unwrap();
        let tl = build_timeline(
            &SequenceSpec::new(SequenceKind::Cpmg, 1, 1e-6, PulseMode::Ideal).unwrap(),
            &s,
        )
        .unwrap();
        let u = sensor_rotation(&tl, &s, &sig, default_dt(&s, &sig)).unwrap();
        assert!((u.angle() - PI).abs() < 1e-12);
    }
}
