//! Exact piecewise-constant evolution of sensor plus one nuclear spin.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::math::{kron, CMatrix, HermitianEigen, Rotation3, SpinOperators, C64};
use crate::model::{QuantumSignal, SensorSpec};
use crate::sequences::{Segment, SequenceTimeline};

use super::{MeasurementProtocol, SimResult, UNITARITY_ABORT};

/// Two-spin Hamiltonian of one segment, rad/s. Instant pulses have none.
pub fn segment_hamiltonian(
    seg: &Segment,
    sensor: &SensorSpec,
    sig: &QuantumSignal,
) -> Result<CMatrix> {
    let ops = Operators::new(sig);
    match *seg {
        Segment::Free { .. } => Ok(ops.free(sensor, sig)),
        Segment::Pulse { phase, .. } => Ok(&ops.free(sensor, sig) + &ops.drive(sensor, phase)),
        Segment::InstantPulse { .. } => Err(Error::InstantPulseHamiltonian),
    }
}

struct Operators {
    s: SpinOperators,
    i: SpinOperators,
    sz_in: CMatrix,
}

impl Operators {
    fn new(sig: &QuantumSignal) -> Self {
        let s = SpinOperators::spin_half();
        let i = SpinOperators::for_species(sig.spin.species());
        let sz_in = kron(&s.z, &i.identity());
        Operators { s, i, sz_in }
    }

    fn free(&self, sensor: &SensorSpec, sig: &QuantumSignal) -> CMatrix {
        let hyperfine = kron(&self.s.z, &self.i.x).scale(sig.a_perp);
        let zeeman = kron(&self.s.identity(), &self.i.z).scale(sig.omega0());
        &(&self.sz_in.scale(sensor.detuning) + &hyperfine) + &zeeman
    }

    fn drive(&self, sensor: &SensorSpec, phase: f64) -> CMatrix {
        let sensor_part = &self.s.x.scale(phase.cos()) + &self.s.y.scale(phase.sin());
        kron(&sensor_part, &self.i.identity()).scale(sensor.rabi)
    }
}

fn su2(r: &Rotation3) -> CMatrix {
    let [w, x, y, z] = r.quaternion();
    CMatrix::from_rows(
        2,
        &[
            C64::new(w, -z),
            C64::new(-y, -x),
            C64::new(y, -x),
            C64::new(w, z),
        ],
    )
}

fn checked(u: CMatrix) -> Result<CMatrix> {
    let defect = u.unitarity_defect();
    if defect > UNITARITY_ABORT {
        return Err(Error::NonUnitary { defect });
    }
    Ok(u)
}

/// Propagators keyed by segment, reused across the timeline.
struct Cache {
    free: HermitianEigen,
    pulses: Vec<(f64, HermitianEigen)>,
    entries: Vec<(Segment, DMatrix<C64>)>,
}

impl Cache {
    fn get(
        &mut self,
        seg: &Segment,
        ops: &Operators,
        sensor: &SensorSpec,
        sig: &QuantumSignal,
        nd: usize,
    ) -> Result<&DMatrix<C64>> {
        if let Some(pos) = self.entries.iter().position(|(s, _)| s == seg) {
            return Ok(&self.entries[pos].1);
        }
        let u = match *seg {
            Segment::Free { duration } => self.free.propagator(duration),
            Segment::Pulse { duration, phase } => {
                let idx = match self.pulses.iter().position(|(p, _)| *p == phase) {
                    Some(i) => i,
                    None => {
                        let h = &ops.free(sensor, sig) + &ops.drive(sensor, phase);
                        self.pulses.push((phase, HermitianEigen::new(&h)?));
                        self.pulses.len() - 1
                    }
                };
                self.pulses[idx].1.propagator(duration)
            }
            Segment::InstantPulse { phase, angle } => {
                let r = Rotation3::about([phase.cos(), phase.sin(), 0.0], angle);
                kron(&su2(&r), &CMatrix::identity(nd))
            }
        };
        let u = checked(u)?;
        self.entries.push((*seg, u.inner().clone()));
        Ok(&self.entries.last().expect("just pushed").1)
    }
}

/// Exact evolution; `p` is averaged over the initial nuclear Iz eigenstates.
pub fn evolve_quantum(
    tl: &SequenceTimeline,
    sensor: &SensorSpec,
    sig: &QuantumSignal,
    proto: &MeasurementProtocol,
) -> Result<SimResult> {
    let ops = Operators::new(sig);
    let nd = ops.i.dim();
    let id_n = CMatrix::identity(nd);
    let mut cache = Cache {
        free: HermitianEigen::new(&ops.free(sensor, sig))?,
        pulses: Vec::new(),
        entries: Vec::new(),
    };

    // columns: prepared sensor ⊗ |m⟩ for each nuclear basis state
    let prep = kron(&su2(&proto.preparation), &id_n);
    let initial: Vec<usize> = (0..nd).collect();
    let mut state = prep.columns(&initial);
    for seg in &tl.segments {
        if seg.duration() == 0.0 && matches!(seg, Segment::Free { .. }) {
            continue;
        }
        let u = cache.get(seg, &ops, sensor, sig, nd)?;
        state = u * &state;
    }

    let conditional_phases = (0..nd)
        .map(|m| {
            let col = state.column(m);
            let rho01: C64 = (0..nd).map(|n| col[n] * col[nd + n].conj()).sum();
            (-rho01.im).atan2(rho01.re)
        })
        .collect();

    let readout = kron(&su2(&proto.readout), &id_n);
    let out = readout.inner() * &state;
    let mut p = 0.0;
    for m in 0..nd {
        for n in nd..2 * nd {
            p += out[(n, m)].norm_sqr();
        }
    }
    Ok(SimResult {
        p: p / nd as f64,
        conditional_phases,
    })
}
