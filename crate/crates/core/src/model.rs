//! Sensor, signal and sequence parameters.
//!
//! Everything is stored in SI units: seconds, Hz for plain frequencies, rad/s
//! for angular frequencies, tesla for fields.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::SpinSpecies;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub mod units {
    use super::TWO_PI;

    /// MHz (cyclic) to rad/s.
    pub fn mhz_to_rad_s(mhz: f64) -> f64 {
        TWO_PI * mhz * 1e6
    }

    pub fn rad_s_to_mhz(w: f64) -> f64 {
        w / (TWO_PI * 1e6)
    }

    pub fn khz_to_rad_s(khz: f64) -> f64 {
        TWO_PI * khz * 1e3
    }

    pub fn rad_s_to_khz(w: f64) -> f64 {
        w / (TWO_PI * 1e3)
    }

    pub fn mhz_to_hz(mhz: f64) -> f64 {
        mhz * 1e6
    }

    pub fn ns_to_s(ns: f64) -> f64 {
        ns * 1e-9
    }

    pub fn mt_to_t(mt: f64) -> f64 {
        mt * 1e-3
    }

    /// MHz/T (cyclic) to rad/s/T.
    pub fn mhz_per_t_to_rad(g: f64) -> f64 {
        TWO_PI * g * 1e6
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositive { name, value })
    }
}

/// Interpulse delay for detection frequency `f`.
pub fn tau_for_frequency(f: f64) -> Result<f64> {
    positive("detection frequency", f)?;
    Ok(1.0 / (2.0 * f))
}

/// Static and control parameters of the sensor qubit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    /// Δω, rad/s.
    pub detuning: f64,
    /// ω₁, rad/s.
    pub rabi: f64,
}

impl SensorSpec {
    pub fn new(detuning: f64, rabi: f64) -> Result<Self> {
        positive("Rabi frequency", rabi)?;
        if !detuning.is_finite() {
            return Err(Error::NonPositive {
                name: "finite detuning",
                value: detuning,
            });
        }
        Ok(SensorSpec { detuning, rabi })
    }

    pub fn t_pi(&self) -> f64 {
        std::f64::consts::PI / self.rabi
    }

    pub fn with_detuning(&self, detuning: f64) -> Self {
        SensorSpec { detuning, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NuclearSpin {
    #[serde(rename = "1/2")]
    Half,
    #[serde(rename = "1")]
    One,
}

impl NuclearSpin {
    pub fn species(self) -> SpinSpecies {
        match self {
            NuclearSpin::Half => SpinSpecies::NuclearHalf,
            NuclearSpin::One => SpinSpecies::NuclearOne,
        }
    }

    pub fn multiplicity(self) -> usize {
        match self {
            NuclearSpin::Half => 2,
            NuclearSpin::One => 3,
        }
    }
}

/// A single nuclear spin hyperfine-coupled to the sensor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumSignal {
    /// a⊥, rad/s.
    pub a_perp: f64,
    /// a∥, rad/s.
    pub a_par: f64,
    /// γ_n, rad/s/T.
    pub gamma: f64,
    /// B, tesla.
    pub field: f64,
    pub spin: NuclearSpin,
}

impl QuantumSignal {
    pub fn new(a_perp: f64, a_par: f64, gamma: f64, field: f64, spin: NuclearSpin) -> Result<Self> {
        if !(a_perp >= 0.0) {
            return Err(Error::NonPositive {
                name: "a_perp (non-negative)",
                value: a_perp,
            });
        }
        Ok(QuantumSignal {
            a_perp,
            a_par,
            gamma,
            field,
            spin,
        })
    }

    /// Effective nuclear Larmor frequency ω₀ = γB + a∥/2, rad/s.
    pub fn omega0(&self) -> f64 {
        self.gamma * self.field + 0.5 * self.a_par
    }

    pub fn larmor_hz(&self) -> f64 {
        self.omega0() / TWO_PI
    }
}

/// Classical ac field `ω_ac cos(2π f_ac t + φ₀)` along the sensor quantization axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSignal {
    /// ω_ac, rad/s.
    pub amplitude: f64,
    /// f_ac, Hz.
    pub f_ac: f64,
    /// φ₀, rad.
    pub phase: f64,
}

impl ClassicalSignal {
    pub fn new(amplitude: f64, f_ac: f64, phase: f64) -> Result<Self> {
        positive("f_ac", f_ac)?;
        Ok(ClassicalSignal {
            amplitude,
            f_ac,
            phase,
        })
    }

    pub fn with_phase(&self, phase: f64) -> Self {
        ClassicalSignal { phase, ..*self }
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        ClassicalSignal { amplitude, ..*self }
    }

    pub fn omega(&self) -> f64 {
        TWO_PI * self.f_ac
    }

    /// Field value ω_ac cos(Ωt + φ₀) at time `t`.
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        self.amplitude * (self.omega() * t + self.phase).cos()
    }
}

/// ω_ac = a⊥/2, f_ac = ω₀/2π, φ₀ = 0.
pub fn quantum_to_classical(q: &QuantumSignal) -> ClassicalSignal {
    ClassicalSignal {
        amplitude: 0.5 * q.a_perp,
        f_ac: q.larmor_hz(),
        phase: 0.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Signal {
    Quantum(QuantumSignal),
    Classical(ClassicalSignal),
}

impl Signal {
    pub fn f_ac(&self) -> f64 {
        match self {
            Signal::Quantum(q) => q.larmor_hz(),
            Signal::Classical(c) => c.f_ac,
        }
    }

    pub fn as_classical(&self) -> ClassicalSignal {
        match self {
            Signal::Quantum(q) => quantum_to_classical(q),
            Signal::Classical(c) => *c,
        }
    }

    /// Same signal with its coupling (a⊥ or ω_ac) replaced; `coupling` is a⊥
    /// for quantum signals and ω_ac for classical ones.
    pub fn with_coupling(&self, coupling: f64) -> Signal {
        match self {
            Signal::Quantum(q) => Signal::Quantum(QuantumSignal {
                a_perp: coupling,
                ..*q
            }),
            Signal::Classical(c) => Signal::Classical(c.with_amplitude(coupling)),
        }
    }

    pub fn with_field(&self, field: f64) -> Signal {
        match self {
            Signal::Quantum(q) => Signal::Quantum(QuantumSignal { field, ..*q }),
            Signal::Classical(c) => Signal::Classical(*c),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Cpmg,
    Xy4,
    Xy8,
    Xy16,
}

impl SequenceKind {
    pub const ALL: [SequenceKind; 4] = [
        SequenceKind::Cpmg,
        SequenceKind::Xy4,
        SequenceKind::Xy8,
        SequenceKind::Xy16,
    ];

    pub fn block_len(self) -> usize {
        match self {
            SequenceKind::Cpmg => 1,
            SequenceKind::Xy4 => 4,
            SequenceKind::Xy8 => 8,
            SequenceKind::Xy16 => 16,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SequenceKind::Cpmg => "CPMG",
            SequenceKind::Xy4 => "XY4",
            SequenceKind::Xy8 => "XY8",
            SequenceKind::Xy16 => "XY16",
        }
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SequenceKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "cpmg" => Ok(SequenceKind::Cpmg),
            "xy4" => Ok(SequenceKind::Xy4),
            "xy8" => Ok(SequenceKind::Xy8),
            "xy16" => Ok(SequenceKind::Xy16),
            _ => Err(format!(
                "unknown sequence kind '{s}' (expected cpmg, xy4, xy8 or xy16)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseMode {
    Ideal,
    Finite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    pub pulses: usize,
    /// Center-to-center pulse spacing, s.
    pub tau: f64,
    pub mode: PulseMode,
}

impl SequenceSpec {
    pub fn new(kind: SequenceKind, pulses: usize, tau: f64, mode: PulseMode) -> Result<Self> {
        check_pulse_count(kind, pulses)?;
        positive("tau", tau)?;
        Ok(SequenceSpec {
            kind,
            pulses,
            tau,
            mode,
        })
    }

    /// Detection frequency 1/(2τ).
    pub fn frequency(&self) -> f64 {
        1.0 / (2.0 * self.tau)
    }

    pub fn total_time(&self) -> f64 {
        self.pulses as f64 * self.tau
    }

    /// Finite pulses must fit inside the interpulse delay.
    pub fn check_fits(&self, sensor: &SensorSpec) -> Result<()> {
        if self.mode == PulseMode::Finite && sensor.t_pi() > self.tau {
            return Err(Error::PulseOverlap {
                t_pi: sensor.t_pi(),
                tau: self.tau,
            });
        }
        Ok(())
    }
}

pub fn check_pulse_count(kind: SequenceKind, pulses: usize) -> Result<()> {
    if pulses == 0 {
        return Err(Error::NoPulses);
    }
    if !pulses.is_multiple_of(kind.block_len()) {
        return Err(Error::BlockDivisibility {
            kind: kind.name(),
            block: kind.block_len(),
            pulses,
        });
    }
    Ok(())
}

/// Positive rational harmonic ratio `num/den` of a detection frequency to f_ac.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Harmonic {
    pub num: u32,
    pub den: u32,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

impl Harmonic {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidHarmonic(format!("{num}/{den}")));
        }
        let g = gcd(num as u64, den as u64) as u32;
        Ok(Harmonic {
            num: num / g,
            den: den / g,
        })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Harmonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Harmonic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidHarmonic(s.to_string());
        let (n, d) = match s.trim().split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        Harmonic::new(n.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_examples() {
        assert!((tau_for_frequency(2e6).unwrap() - 250e-9).abs() < 1e-21);
        assert!((tau_for_frequency(8.13e6).unwrap() - 61.5e-9).abs() < 0.05e-9);
        assert_eq!(tau_for_frequency(1.0).unwrap(), 0.5);
        assert!(tau_for_frequency(0.0).is_err());
        assert!(tau_for_frequency(-3.0).is_err());
    }

    #[test]
    fn t_pi_times_rabi_is_pi() {
        let s = SensorSpec::new(0.0, units::mhz_to_rad_s(20.0)).unwrap();
        assert_eq!(s.t_pi() * s.rabi, std::f64::consts::PI);
        assert!((s.t_pi() - 25e-9).abs() < 1e-20);
        assert!(SensorSpec::new(0.0, 0.0).is_err());
    }

    #[test]
    fn association_examples() {
        let q = QuantumSignal::new(units::khz_to_rad_s(400.0), 0.0, 0.0, 0.0, NuclearSpin::Half)
            .unwrap();
        let c = quantum_to_classical(&q);
        assert!((c.amplitude - units::khz_to_rad_s(200.0)).abs() < 1e-9);
        assert_eq!(c.phase, 0.0);

        let zero = QuantumSignal { a_perp: 0.0, ..q };
        assert_eq!(quantum_to_classical(&zero).amplitude, 0.0);

        let carbon = QuantumSignal::new(
            0.0,
            units::khz_to_rad_s(10.0),
            units::mhz_per_t_to_rad(10.71),
            0.183,
            NuclearSpin::Half,
        )
        .unwrap();
        let f = quantum_to_classical(&carbon).f_ac;
        assert!((f - 1.96e6).abs() < 0.01e6, "{f}");
        assert!(QuantumSignal::new(-1.0, 0.0, 1.0, 1.0, NuclearSpin::Half).is_err());
    }

    #[test]
    fn unit_round_trips() {
        for x in [1e-3, 0.4, 2.0, 20.0, 1234.5] {
            assert!((units::rad_s_to_mhz(units::mhz_to_rad_s(x)) - x).abs() <= 1e-12 * x);
            assert!((units::rad_s_to_khz(units::khz_to_rad_s(x)) - x).abs() <= 1e-12 * x);
        }
    }

    #[test]
    fn block_divisibility_exhaustive() {
        for kind in SequenceKind::ALL {
            for n in 0..=64usize {
                let ok = SequenceSpec::new(kind, n, 1e-7, PulseMode::Ideal).is_ok();
                assert_eq!(ok, n >= 1 && n % kind.block_len() == 0, "{kind} {n}");
            }
        }
    }

    #[test]
    fn finite_pulses_must_fit() {
        let s = SensorSpec::new(0.0, units::mhz_to_rad_s(20.0)).unwrap();
        let short = SequenceSpec::new(SequenceKind::Xy4, 4, 20e-9, PulseMode::Finite).unwrap();
        assert!(matches!(
            short.check_fits(&s),
            Err(Error::PulseOverlap { .. })
        ));
        let ideal = SequenceSpec {
            mode: PulseMode::Ideal,
            ..short
        };
        assert!(ideal.check_fits(&s).is_ok());
    }

    #[test]
    fn harmonic_parse_and_reduce() {
        assert_eq!(
            "4/3".parse::<Harmonic>().unwrap(),
            Harmonic { num: 4, den: 3 }
        );
        assert_eq!(
            "8".parse::<Harmonic>().unwrap(),
            Harmonic { num: 8, den: 1 }
        );
        assert_eq!(Harmonic::new(4, 2).unwrap(), Harmonic { num: 2, den: 1 });
        assert!("0/3".parse::<Harmonic>().is_err());
        assert!("x".parse::<Harmonic>().is_err());
        assert_eq!(Harmonic::new(2, 13).unwrap().to_string(), "2/13");
    }

    #[test]
    fn kind_parse() {
        assert_eq!("XY8".parse::<SequenceKind>().unwrap(), SequenceKind::Xy8);
        assert!("xy5".parse::<SequenceKind>().is_err());
    }
}
