//! Closed-form Bloch-vector picture of anomalous phase accumulation.
//!
//! During a π pulse the ac field tilts the drive axis by θ_eff out of the
//! equatorial plane. For XY4 at twice the signal frequency the tilts of the
//! X pulses alternate in sign and the block nets a small rotation about ŷ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{compose_rotations, Rotation3, Vec3};
use crate::model::{Harmonic, SequenceKind};

/// θ_eff = atan(ω_ac / ω₁).
pub fn effective_field_angle(omega_ac: f64, rabi: f64) -> f64 {
    (omega_ac / rabi).atan()
}

/// Ordinary phase per free interval at resonance order `k`: (2 ω_ac τ / π) / k.
pub fn free_phase(omega_ac: f64, tau: f64, k: u32) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::NonPositive {
            name: "tau",
            value: tau,
        });
    }
    if k.is_multiple_of(2) {
        return Err(Error::EvenOrder(k));
    }
    Ok(2.0 * omega_ac * tau / std::f64::consts::PI / k as f64)
}

/// Drive axes of the four XY4 pulses tilted by the ac field.
pub fn anomalous_axes(theta_eff: f64) -> [Vec3; 4] {
    let (s, c) = theta_eff.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [c, 0.0, -s], [0.0, 1.0, 0.0]]
}

/// Net rotation of one XY4 block of π pulses about the tilted axes.
pub fn xy4_block_rotation(theta_eff: f64) -> Rotation3 {
    let rs = anomalous_axes(theta_eff).map(|n| Rotation3::about(n, std::f64::consts::PI));
    compose_rotations(&rs)
}

/// r = c · t_π / (2τ).
pub fn relative_strength(t_pi: f64, tau: f64, coefficient: f64) -> f64 {
    coefficient * t_pi / (2.0 * tau)
}

/// Reference coefficient for one sequence and harmonic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum Reference {
    /// φ_π = c · θ_eff per pulse.
    Value(f64),
    /// No anomalous response.
    Absent,
    /// Response only with a static detuning.
    Gated,
}

/// Harmonic columns of the reference table.
pub const TABLE_HARMONICS: [(u32, u32); 12] = [
    (2, 1),
    (4, 1),
    (8, 1),
    (2, 3),
    (4, 3),
    (8, 3),
    (2, 5),
    (4, 5),
    (8, 5),
    (2, 7),
    (4, 7),
    (8, 7),
];

use Reference::{Absent as A, Gated as G, Value as V};

const CPMG_ROW: [Reference; 12] = [A; 12];
const XY4_ROW: [Reference; 12] = [V(1.00), A, A, V(1.00), A, A, V(1.00), A, A, V(1.00), A, A];
const XY8_ROW: [Reference; 12] = [
    V(0.71),
    V(0.27),
    A,
    V(0.71),
    V(0.65),
    A,
    V(0.71),
    V(0.65),
    A,
    V(0.71),
    V(0.27),
    A,
];
const XY16_ROW: [Reference; 12] = [G, G, V(0.21), G, G, V(0.91), G, G, V(0.18), G, G, V(0.32)];

pub fn table_harmonics() -> Vec<Harmonic> {
    TABLE_HARMONICS
        .iter()
        .map(|&(num, den)| Harmonic { num, den })
        .collect()
}

/// Published single-block, weak-coupling coefficient.
pub fn reference_coefficient(kind: SequenceKind, h: Harmonic) -> Option<Reference> {
    let col = TABLE_HARMONICS
        .iter()
        .position(|&(n, d)| n == h.num && d == h.den)?;
    let row = match kind {
        SequenceKind::Cpmg => &CPMG_ROW,
        SequenceKind::Xy4 => &XY4_ROW,
        SequenceKind::Xy8 => &XY8_ROW,
        SequenceKind::Xy16 => &XY16_ROW,
    };
    Some(row[col])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicResponse {
    pub harmonic: Harmonic,
    /// Predicted φ_π per pulse, rad (zero when absent or gated).
    pub phi_pi: f64,
    pub coefficient: f64,
    pub gated: bool,
}

/// Tabulated prediction of the anomalous phase at `h`.
pub fn predict(kind: SequenceKind, h: Harmonic, theta_eff: f64) -> Option<HarmonicResponse> {
    let r = reference_coefficient(kind, h)?;
    let (coefficient, gated) = match r {
        Reference::Value(c) => (c, false),
        Reference::Absent => (0.0, false),
        Reference::Gated => (0.0, true),
    };
    Some(HarmonicResponse {
        harmonic: h,
        phi_pi: coefficient * theta_eff,
        coefficient,
        gated,
    })
}
