use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    check_pulse_count, tau_for_frequency, PulseMode, SensorSpec, SequenceKind, SequenceSpec, Signal,
};
use crate::propagator::{simulate, Engine};
use crate::sequences::build_timeline;

/// Everything a sweep point needs besides the swept coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSetup {
    pub kind: SequenceKind,
    pub pulses: usize,
    pub mode: PulseMode,
    pub sensor: SensorSpec,
    pub signal: Signal,
    pub engine: Engine,
}

impl SweepSetup {
    /// Transition probability at detection frequency `f`; `None` when finite
    /// pulses would not fit into τ.
    pub fn probability_at(&self, f: f64) -> Result<Option<f64>> {
        let tau = tau_for_frequency(f)?;
        let seq = SequenceSpec::new(self.kind, self.pulses, tau, self.mode)?;
        if seq.check_fits(&self.sensor).is_err() {
            return Ok(None);
        }
        let tl = build_timeline(&seq, &self.sensor)?;
        Ok(Some(
            simulate(&tl, &self.sensor, &self.signal, self.engine)?.p,
        ))
    }
}

/// Linear grid of `points` frequencies from `fmin` to `fmax` inclusive.
pub fn linear_grid(fmin: f64, fmax: f64, points: usize) -> Result<Vec<f64>> {
    if !(fmin > 0.0) || !(fmax > fmin) || points < 2 {
        return Err(Error::InvalidGrid(format!(
            "need 0 < fmin < fmax and >= 2 points, got {fmin}..{fmax} with {points}"
        )));
    }
    let step = (fmax - fmin) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                fmax
            } else {
                fmin + i as f64 * step
            }
        })
        .collect())
}

/// Points needed so the spacing resolves the narrowest resonance
/// (width `fmin / (N/2)`) with three samples.
pub fn required_points(fmin: f64, fmax: f64, pulses: usize) -> usize {
    let width = fmin / (0.5 * pulses.max(1) as f64);
    ((fmax - fmin) / (width / 3.0)).ceil() as usize + 1
}

/// Linear grid refined to at least [`required_points`].
pub fn auto_grid(fmin: f64, fmax: f64, points: usize, pulses: usize) -> Result<Vec<f64>> {
    linear_grid(fmin, fmax, points.max(required_points(fmin, fmax, pulses)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSweep {
    pub freqs: Vec<f64>,
    /// `None` marks points where finite pulses overlap.
    pub p: Vec<Option<f64>>,
    pub setup: SweepSetup,
}

impl SpectrumSweep {
    pub fn max_p(&self) -> f64 {
        self.p.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Value at the grid point nearest to `f`.
    pub fn p_near(&self, f: f64) -> Option<f64> {
        let i = self
            .freqs
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - f).abs().total_cmp(&(b.1 - f).abs()))?
            .0;
        self.p[i]
    }

    pub fn flagged(&self) -> usize {
        self.p.iter().filter(|p| p.is_none()).count()
    }

    /// `f_hz,p`; flagged points have an empty `p` field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# schema=1\nf_hz,p\n");
        for (f, p) in self.freqs.iter().zip(&self.p) {
            match p {
                Some(p) => writeln!(out, "{f},{p}"),
                None => writeln!(out, "{f},"),
            }
            .expect("writing to a String");
        }
        out
    }
}

pub fn sweep_spectrum(grid: &[f64], setup: &SweepSetup) -> Result<SpectrumSweep> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid(
            "frequency grid must be strictly ascending".into(),
        ));
    }
    let p = grid
        .par_iter()
        .map(|&f| setup.probability_at(f))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumSweep {
        freqs: grid.to_vec(),
        p,
        setup: *setup,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSweep {
    /// Coupling values: a⊥ for quantum signals, ω_ac for classical ones (rad/s).
    pub amplitudes: Vec<f64>,
    /// Δω values, rad/s.
    pub detunings: Vec<f64>,
    pub frequency: f64,
    /// Row-major by detuning: `p[d][a]`.
    pub p: Vec<Vec<Option<f64>>>,
    pub setup: SweepSetup,
}

impl MapSweep {
    pub fn row_max(&self, d: usize) -> f64 {
        self.p[d].iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn max_p(&self) -> f64 {
        (0..self.p.len())
            .map(|d| self.row_max(d))
            .fold(0.0, f64::max)
    }

    /// `amp,detuning,p` with amplitudes and detunings in rad/s.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# schema=1\namp,detuning,p\n");
        for (d, row) in self.detunings.iter().zip(&self.p) {
            for (a, p) in self.amplitudes.iter().zip(row) {
                let p = p.map(|p| p.to_string()).unwrap_or_default();
                writeln!(out, "{a},{d},{p}").expect("writing to a String");
            }
        }
        out
    }
}

/// Probability over an (amplitude, detuning) grid at fixed detection frequency.
pub fn sweep_map(
    amplitudes: &[f64],
    detunings: &[f64],
    frequency: f64,
    setup: &SweepSetup,
) -> Result<MapSweep> {
    let cells: Vec<(usize, usize)> = (0..detunings.len())
        .flat_map(|d| (0..amplitudes.len()).map(move |a| (d, a)))
        .collect();
    let flat = cells
        .par_iter()
        .map(|&(d, a)| {
            let point = SweepSetup {
                sensor: setup.sensor.with_detuning(detunings[d]),
                signal: setup.signal.with_coupling(amplitudes[a]),
                ..*setup
            };
            point.probability_at(frequency)
        })
        .collect::<Result<Vec<_>>>()?;
    let p = flat
        .chunks(amplitudes.len().max(1))
        .map(<[_]>::to_vec)
        .collect();
    Ok(MapSweep {
        amplitudes: amplitudes.to_vec(),
        detunings: detunings.to_vec(),
        frequency,
        p,
        setup: *setup,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    pub pulses: usize,
    /// T = N τ, s.
    pub total_time: f64,
    pub p: f64,
}

/// p versus total evolution time at fixed detection frequency. `N = 0` is
/// the empty sequence.
pub fn sweep_time_evolution(
    pulses: &[usize],
    frequency: f64,
    setup: &SweepSetup,
) -> Result<Vec<TimePoint>> {
    let tau = tau_for_frequency(frequency)?;
    for &n in pulses.iter().filter(|&&n| n > 0) {
        check_pulse_count(setup.kind, n)?;
    }
    SequenceSpec::new(setup.kind, setup.kind.block_len(), tau, setup.mode)?
        .check_fits(&setup.sensor)?;
    pulses
        .par_iter()
        .map(|&n| {
            if n == 0 {
                return Ok(TimePoint {
                    pulses: 0,
                    total_time: 0.0,
                    p: 0.0,
                });
            }
            let point = SweepSetup {
                pulses: n,
                ..*setup
            };
            let p = point.probability_at(frequency)?.expect("fit checked above");
            Ok(TimePoint {
                pulses: n,
                total_time: n as f64 * tau,
                p,
            })
        })
        .collect()
}

pub fn time_evolution_to_csv(series: &[TimePoint]) -> String {
    let mut out = String::from("# schema=1\nN,T_s,p\n");
    for t in series {
        writeln!(out, "{},{},{}", t.pulses, t.total_time, t.p).expect("writing to a String");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{units, NuclearSpin, QuantumSignal};

    fn setup(a_khz: f64, mode: PulseMode) -> SweepSetup {
        let q = QuantumSignal::new(
            units::khz_to_rad_s(a_khz),
            0.0,
            units::mhz_to_rad_s(2.0),
            1.0,
            NuclearSpin::Half,
        )
        .unwrap();
        SweepSetup {
            kind: SequenceKind::Xy8,
            pulses: 64,
            mode,
            sensor: SensorSpec::new(0.0, units::mhz_to_rad_s(20.0)).unwrap(),
            signal: Signal::Quantum(q),
            engine: Engine::Quantum,
        }
    }

    #[test]
    fn grid_construction() {
        let g = linear_grid(1.0, 2.0, 5).unwrap();
        assert_eq!(g, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        assert!(linear_grid(0.0, 1.0, 5).is_err());
        assert!(linear_grid(2.0, 1.0, 5).is_err());
        assert!(linear_grid(1.0, 2.0, 1).is_err());
        // width at 1 MHz with N = 100 is 20 kHz -> spacing <= 6.67 kHz
        let n = required_points(1e6, 2e6, 100);
        assert!((1e6 / (n - 1) as f64) <= 20e3 / 3.0);
        assert_eq!(auto_grid(1e6, 2e6, 10, 100).unwrap().len(), n);
        assert_eq!(auto_grid(1e6, 2e6, 10_000, 100).unwrap().len(), 10_000);
    }

    #[test]
    fn empty_signal_is_flat() {
        let s = setup(0.0, PulseMode::Finite);
        let sw = sweep_spectrum(&linear_grid(0.5e6, 6e6, 40).unwrap(), &s).unwrap();
        assert!(sw.max_p() < 1e-10);
        assert_eq!(sw.flagged(), 0);
    }

    #[test]
    fn overlapping_points_are_flagged() {
        let s = setup(100.0, PulseMode::Finite);
        // t_pi = 25 ns: f above 20 MHz cannot fit
        let sw = sweep_spectrum(&[10e6, 19e6, 21e6, 30e6], &s).unwrap();
        assert_eq!(
            sw.p.iter().map(Option::is_some).collect::<Vec<_>>(),
            vec![true, true, false, false]
        );
        assert!(sw.to_csv().lines().any(|l| l == "21000000,"));
        assert!(sweep_spectrum(&[2e6, 1e6], &s).is_err());
    }

    #[test]
    fn map_layout_and_zero_column() {
        let s = setup(0.0, PulseMode::Finite);
        let amps = [0.0, units::khz_to_rad_s(100.0)];
        let dets = [0.0, units::mhz_to_rad_s(0.5), units::mhz_to_rad_s(1.0)];
        let m = sweep_map(&amps, &dets, 4e6, &s).unwrap();
        assert_eq!(m.p.len(), 3);
        assert!(m.p.iter().all(|r| r.len() == 2));
        assert!(m.p[0][0].unwrap() < 1e-10);
        assert!(m
            .p
            .iter()
            .flatten()
            .all(|p| (0.0..=1.0).contains(&p.unwrap())));
        assert_eq!(m.to_csv().lines().count(), 2 + 6);
    }

    #[test]
    fn time_evolution_basics() {
        let s = setup(20.0, PulseMode::Ideal);
        let series = sweep_time_evolution(&[0, 8, 16], 2e6, &s).unwrap();
        assert_eq!(
            series[0],
            TimePoint {
                pulses: 0,
                total_time: 0.0,
                p: 0.0
            }
        );
        assert!((series[2].total_time - 16.0 * 250e-9).abs() < 1e-18);
        assert!(series[2].p > series[1].p);
        assert!(sweep_time_evolution(&[12], 2e6, &s).is_err());
    }

    #[test]
    fn quadratic_onset() {
        let f = 2e6;
        let p1 = sweep_time_evolution(&[16], f, &setup(5.0, PulseMode::Ideal)).unwrap()[0].p;
        let p2 = sweep_time_evolution(&[16], f, &setup(10.0, PulseMode::Ideal)).unwrap()[0].p;
        assert!((p2 / p1 - 4.0).abs() < 0.01, "{}", p2 / p1);
    }
}
