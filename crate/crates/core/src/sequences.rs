//! Decoupling sequence timelines.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{PulseMode, SensorSpec, SequenceKind, SequenceSpec};

pub const X: f64 = 0.0;
pub const Y: f64 = FRAC_PI_2;
pub const X_BAR: f64 = PI;
pub const Y_BAR: f64 = 3.0 * FRAC_PI_2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Segment {
    Free { duration: f64 },
    Pulse { duration: f64, phase: f64 },
    InstantPulse { phase: f64, angle: f64 },
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match *self {
            Segment::Free { duration } | Segment::Pulse { duration, .. } => duration,
            Segment::InstantPulse { .. } => 0.0,
        }
    }
}

#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, d: f64) {
        let t = self.sum + d;
        self.comp += if self.sum.abs() >= d.abs() {
            (self.sum - t) + d
        } else {
            (d - t) + self.sum
        };
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Phases of one base block.
pub fn phase_pattern(kind: SequenceKind) -> Vec<f64> {
    let xy4 = [X, Y, X, Y];
    match kind {
        SequenceKind::Cpmg => vec![Y],
        SequenceKind::Xy4 => xy4.to_vec(),
        SequenceKind::Xy8 => xy4.iter().chain(xy4.iter().rev()).copied().collect(),
        SequenceKind::Xy16 => {
            let xy8 = phase_pattern(SequenceKind::Xy8);
            let inverted = xy8.iter().map(|p| (p + PI) % (2.0 * PI));
            xy8.iter().copied().chain(inverted).collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceTimeline {
    pub segments: Vec<Segment>,
    pub spec: SequenceSpec,
    pub t_pi: f64,
}

impl SequenceTimeline {
    pub fn pulses(&self) -> usize {
        self.spec.pulses
    }

    pub fn total_duration(&self) -> f64 {
        self.spec.total_time()
    }

    /// Compensated (Neumaier) sum of all segment durations.
    pub fn duration_sum(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        self.segments.iter().for_each(|s| acc.add(s.duration()));
        acc.value()
    }

    pub fn kind(&self) -> SequenceKind {
        self.spec.kind
    }

    /// Start time of every segment.
    pub fn start_times(&self) -> Vec<f64> {
        let mut acc = CompensatedSum::default();
        self.segments
            .iter()
            .map(|s| {
                let start = acc.value();
                acc.add(s.duration());
                start
            })
            .collect()
    }

    /// Center times of the pulses in order.
    pub fn pulse_centers(&self) -> Vec<f64> {
        self.segments
            .iter()
            .zip(self.start_times())
            .filter_map(|(s, t)| match s {
                Segment::Pulse { duration, .. } => Some(t + 0.5 * duration),
                Segment::InstantPulse { .. } => Some(t),
                Segment::Free { .. } => None,
            })
            .collect()
    }

    pub fn pulse_phases(&self) -> Vec<f64> {
        self.segments
            .iter()
            .filter_map(|s| match *s {
                Segment::Pulse { phase, .. } | Segment::InstantPulse { phase, .. } => Some(phase),
                Segment::Free { .. } => None,
            })
            .collect()
    }

    /// Debug dump: `index,type,start_ns,duration_ns,phase_deg`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,type,start_ns,duration_ns,phase_deg\n");
        for (i, (seg, t)) in self.segments.iter().zip(self.start_times()).enumerate() {
            let (kind, phase) = match *seg {
                Segment::Free { .. } => ("free", String::new()),
                Segment::Pulse { phase, .. } => ("pulse", format!("{}", phase.to_degrees())),
                Segment::InstantPulse { phase, .. } => {
                    ("instant", format!("{}", phase.to_degrees()))
                }
            };
            let _ = writeln!(
                out,
                "{i},{kind},{},{},{phase}",
                t * 1e9,
                seg.duration() * 1e9
            );
        }
        out
    }
}

/// Free / pulse segments for `seq`; pulse centers sit at τ/2 + jτ.
pub fn build_timeline(seq: &SequenceSpec, sensor: &SensorSpec) -> Result<SequenceTimeline> {
    seq.check_fits(sensor)?;
    let pattern = phase_pattern(seq.kind);
    let tau = seq.tau;
    let t_pi = sensor.t_pi();
    let width = match seq.mode {
        PulseMode::Ideal => 0.0,
        PulseMode::Finite => t_pi,
    };
    let edge = 0.5 * tau - 0.5 * width;
    let interior = tau - width;

    let mut segments = Vec::with_capacity(2 * seq.pulses + 1);
    segments.push(Segment::Free { duration: edge });
    for j in 0..seq.pulses {
        let phase = pattern[j % pattern.len()];
        segments.push(match seq.mode {
            PulseMode::Ideal => Segment::InstantPulse { phase, angle: PI },
            PulseMode::Finite => Segment::Pulse {
                duration: t_pi,
                phase,
            },
        });
        let d = if j + 1 == seq.pulses { edge } else { interior };
        segments.push(Segment::Free { duration: d });
    }
    Ok(SequenceTimeline {
        segments,
        spec: *seq,
        t_pi,
    })
}
