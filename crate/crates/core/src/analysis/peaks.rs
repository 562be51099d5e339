use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Harmonic;

use super::sweep::{linear_grid, sweep_spectrum, SpectrumSweep, SweepSetup};

/// Harmonic multipliers and largest odd order considered by the classifier.
pub const MULTIPLIERS: [u32; 4] = [1, 2, 4, 8];
pub const MAX_ORDER: u32 = 9;

pub const DEFAULT_THRESHOLD: f64 = 0.05;
pub const DEFAULT_TOLERANCE: f64 = 0.015;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Interpolated position, Hz.
    pub frequency: f64,
    pub height: f64,
    /// Grid index of the sampled maximum.
    pub index: usize,
    /// Nearest m/k, or `None` when the residual exceeds the tolerance.
    pub ratio: Option<Harmonic>,
    /// Relative residual `|f / (m/k f_ac) - 1|` of the best candidate.
    pub residual: f64,
    /// Local maxima merged into this peak (1 for raw maxima).
    pub members: usize,
}

/// Vertex of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d2 - d1) / (x[2] - x[0]);
    if !(a < 0.0) {
        return None;
    }
    let b = d1 - a * (x[0] + x[1]);
    let xv = -b / (2.0 * a);
    let yv = y[1] + (xv - x[1]) * (d1 + a * (xv - x[0]));
    Some((xv, yv))
}

/// Interior local maxima above `threshold`, refined by quadratic
/// interpolation and sorted by frequency. Flagged points break
/// neighbourhoods.
pub fn find_peaks(sw: &SpectrumSweep, threshold: f64) -> Vec<Peak> {
    let f = &sw.freqs;
    let mut out = Vec::new();
    for i in 1..f.len().saturating_sub(1) {
        let (Some(l), Some(c), Some(r)) = (sw.p[i - 1], sw.p[i], sw.p[i + 1]) else {
            continue;
        };
        if c <= threshold || c < l || c <= r {
            continue;
        }
        let (frequency, height) = parabola_vertex([f[i - 1], f[i], f[i + 1]], [l, c, r])
            .filter(|(x, _)| *x >= f[i - 1] && *x <= f[i + 1])
            .unwrap_or((f[i], c));
        out.push(Peak {
            frequency,
            height: height.max(c),
            index: i,
            ratio: None,
            residual: f64::INFINITY,
            members: 1,
        });
    }
    out
}

/// Best m/k (m ∈ {1,2,4,8}, k odd ≤ 9) for `ratio` with its relative residual.
pub fn nearest_harmonic(ratio: f64) -> (Harmonic, f64) {
    let mut best = (Harmonic { num: 1, den: 1 }, f64::INFINITY);
    for m in MULTIPLIERS {
        for k in (1..=MAX_ORDER).step_by(2) {
            let h = Harmonic { num: m, den: k };
            let res = (ratio / h.value() - 1.0).abs();
            if res < best.1 {
                best = (h, res);
            }
        }
    }
    best
}

pub fn classify_harmonics(peaks: &[Peak], f_ac: f64, tol: f64) -> Vec<Peak> {
    peaks
        .iter()
        .map(|p| {
            let (h, residual) = nearest_harmonic(p.frequency / f_ac);
            Peak {
                ratio: (residual <= tol).then_some(h),
                residual,
                ..*p
            }
        })
        .collect()
}

/// Merges neighbouring maxima that belong to one over-driven resonance.
///
/// Strong coupling turns a line into a comb of maxima spaced by about the
/// filter width `f / (N/2)`, with a dip at the centre and tails that decay
/// more slowly on the low-frequency side. Consecutive maxima closer than
/// `link` filter widths are merged. The merged peak is placed at the
/// midpoint of the members reaching half the tallest height, and keeps the
/// tallest member's height.
pub fn group_resonances(peaks: &[Peak], pulses: usize, link: f64) -> Vec<Peak> {
    let mut out: Vec<Peak> = Vec::new();
    let mut acc: Vec<Peak> = Vec::new();
    let flush = |acc: &mut Vec<Peak>, out: &mut Vec<Peak>| {
        let Some(top) = acc
            .iter()
            .copied()
            .max_by(|a, b| a.height.total_cmp(&b.height))
        else {
            return;
        };
        let mut core = acc
            .iter()
            .filter(|p| p.height >= 0.5 * top.height)
            .map(|p| p.frequency);
        let first = core.next().expect("top member qualifies");
        let last = core.next_back().unwrap_or(first);
        out.push(Peak {
            frequency: 0.5 * (first + last),
            members: acc.len(),
            ..top
        });
        acc.clear();
    };
    for p in peaks {
        if let Some(last) = acc.last() {
            let width = last.frequency / (0.5 * pulses.max(1) as f64);
            if p.frequency - last.frequency > link * width {
                flush(&mut acc, &mut out);
            }
        }
        acc.push(*p);
    }
    flush(&mut acc, &mut out);
    out
}

pub fn peaks_to_csv(peaks: &[Peak]) -> String {
    let mut out = String::from("# schema=1\nf_hz,p,index,ratio,residual,members\n");
    for p in peaks {
        let ratio = p.ratio.map(|h| h.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.frequency, p.height, p.index, ratio, p.residual, p.members
        )
        .expect("writing to a String");
    }
    out
}

/// Detection window around `ratio × f_ac(B)`, `±half_width` relative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldWindow {
    pub ratio: f64,
    pub half_width: f64,
    pub points: usize,
    /// Pulse count for this window; the setup's count when `None`.
    pub pulses: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldPeak {
    pub field: f64,
    pub window: usize,
    pub frequency: f64,
    pub height: f64,
}

/// Tallest peak in every window at every field. Windows without a peak
/// above `threshold` produce no point.
pub fn sweep_field(
    fields: &[f64],
    windows: &[FieldWindow],
    setup: &SweepSetup,
    threshold: f64,
) -> Result<Vec<FieldPeak>> {
    let jobs: Vec<(usize, usize)> = (0..fields.len())
        .flat_map(|b| (0..windows.len()).map(move |w| (b, w)))
        .collect();
    let found = jobs
        .par_iter()
        .map(|&(b, w)| {
            let field = fields[b];
            let win = windows[w];
            let signal = setup.signal.with_field(field);
            let center = win.ratio * signal.f_ac();
            if !(center > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "window {w} is centered at {center} Hz at B = {field} T"
                )));
            }
            let grid = linear_grid(
                center * (1.0 - win.half_width),
                center * (1.0 + win.half_width),
                win.points,
            )?;
            let point = SweepSetup {
                signal,
                pulses: win.pulses.unwrap_or(setup.pulses),
                ..*setup
            };
            let sw = sweep_spectrum(&grid, &point)?;
            Ok(find_peaks(&sw, threshold)
                .into_iter()
                .max_by(|a, b| a.height.total_cmp(&b.height))
                .map(|p| FieldPeak {
                    field,
                    window: w,
                    frequency: p.frequency,
                    height: p.height,
                }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(found.into_iter().flatten().collect())
}

pub fn field_peaks_to_csv(points: &[FieldPeak]) -> String {
    let mut out = String::from("# schema=1\nB_t,f_peak_hz,window,p\n");
    for p in points {
        writeln!(out, "{},{},{},{}", p.field, p.frequency, p.window, p.height)
            .expect("writing to a String");
    }
    out
}

/// Least-squares line `y = slope x + intercept`.
pub fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::sweep::SweepSetup;
    use crate::model::{
        units, NuclearSpin, PulseMode, QuantumSignal, SensorSpec, SequenceKind, Signal,
    };
    use crate::propagator::Engine;

    fn dummy_setup() -> SweepSetup {
        SweepSetup {
            kind: SequenceKind::Xy8,
            pulses: 8,
            mode: PulseMode::Ideal,
            sensor: SensorSpec::new(0.0, 1.0).unwrap(),
            signal: Signal::Quantum(
                QuantumSignal::new(0.0, 0.0, 1.0, 1.0, NuclearSpin::Half).unwrap(),
            ),
            engine: Engine::Quantum,
        }
    }

    fn synthetic(freqs: Vec<f64>, f: impl Fn(f64) -> f64) -> SpectrumSweep {
        let p = freqs.iter().map(|&x| Some(f(x))).collect();
        SpectrumSweep {
            freqs,
            p,
            setup: dummy_setup(),
        }
    }

    #[test]
    fn flat_spectrum_has_no_peaks() {
        let sw = synthetic((0..100).map(|i| 1.0 + i as f64).collect(), |_| 0.3);
        assert!(find_peaks(&sw, 0.05).is_empty());
    }

    #[test]
    fn parabolic_bump_between_grid_points() {
        let center = 10.37;
        let step = 0.25;
        let sw = synthetic((0..80).map(|i| i as f64 * step).collect(), |x| {
            (0.8 - 0.5 * (x - center).powi(2)).max(0.0)
        });
        let peaks = find_peaks(&sw, 0.05);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].frequency - center).abs() < 0.1 * step);
        assert!((peaks[0].height - 0.8).abs() < 1e-9);
    }

    #[test]
    fn gaussian_peaks_sorted_and_thresholded() {
        let sw = synthetic((0..400).map(|i| i as f64 * 0.05).collect(), |x| {
            0.6 * (-(x - 5.0).powi(2) / 0.1).exp()
                + 0.04 * (-(x - 10.0).powi(2) / 0.1).exp()
                + 0.3 * (-(x - 15.0).powi(2) / 0.1).exp()
        });
        let peaks = find_peaks(&sw, 0.05);
        assert_eq!(peaks.len(), 2);
        assert!(peaks[0].frequency < peaks[1].frequency);
        assert!((peaks[1].frequency - 15.0).abs() < 0.01);
    }

    #[test]
    fn flagged_points_are_skipped() {
        let mut sw = synthetic((0..50).map(|i| i as f64).collect(), |x| {
            (-(x - 20.0).powi(2) / 8.0).exp()
        });
        sw.p[21] = None;
        assert!(find_peaks(&sw, 0.05).is_empty());
    }

    #[test]
    fn classification_examples() {
        let peak = |f| Peak {
            frequency: f,
            height: 0.5,
            index: 0,
            ratio: None,
            residual: 0.0,
            members: 1,
        };
        let c = classify_harmonics(
            &[peak(4.0e6), peak(2.667e6), peak(3.1e6), peak(0.4e6)],
            2e6,
            0.01,
        );
        assert_eq!(c[0].ratio, Some(Harmonic { num: 2, den: 1 }));
        assert_eq!(c[1].ratio, Some(Harmonic { num: 4, den: 3 }));
        assert_eq!(c[2].ratio, None);
        assert_eq!(c[3].ratio, Some(Harmonic { num: 1, den: 5 }));
    }

    #[test]
    fn grouping_merges_close_maxima_only() {
        let peak = |f: f64, h: f64| Peak {
            frequency: f,
            height: h,
            index: 0,
            ratio: None,
            residual: 0.0,
            members: 1,
        };
        // N = 200: width at 1 MHz is 10 kHz
        let raw = [
            peak(0.99e6, 0.2),
            peak(1.0e6, 0.4),
            peak(1.01e6, 0.2),
            peak(1.5e6, 0.3),
        ];
        let g = group_resonances(&raw, 200, 1.5);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].members, 3);
        assert!((g[0].frequency - 1.0e6).abs() < 1.0);
        assert_eq!(g[0].height, 0.4);
        assert_eq!(g[1].members, 1);
        assert!(group_resonances(&[], 200, 1.5).is_empty());
    }

    #[test]
    fn line_fit_recovers_slope() {
        let pts: Vec<(f64, f64)> = [0.1, 0.15, 0.2]
            .iter()
            .map(|&b| (b, 10.7e6 * b + 3e3))
            .collect();
        let (s, i) = fit_line(&pts).unwrap();
        assert!((s - 10.7e6).abs() < 1e-3 && (i - 3e3).abs() < 1e-6);
        assert!(fit_line(&pts[..1]).is_none());
    }

    #[test]
    fn field_sweep_tracks_larmor_frequency() {
        let q = QuantumSignal::new(
            units::khz_to_rad_s(60.0),
            0.0,
            units::mhz_per_t_to_rad(10.705),
            0.1,
            NuclearSpin::Half,
        )
        .unwrap();
        let setup = SweepSetup {
            kind: SequenceKind::Xy8,
            pulses: 48,
            mode: PulseMode::Ideal,
            sensor: SensorSpec::new(0.0, units::mhz_to_rad_s(20.0)).unwrap(),
            signal: Signal::Quantum(q),
            engine: Engine::Quantum,
        };
        let win = FieldWindow {
            ratio: 1.0,
            half_width: 0.05,
            points: 201,
            pulses: None,
        };
        let pts = sweep_field(&[0.1, 0.15, 0.2], &[win], &setup, 0.05).unwrap();
        assert_eq!(pts.len(), 3);
        let (slope, _) = fit_line(
            &pts.iter()
                .map(|p| (p.field, p.frequency))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert!((slope / 10.705e6 - 1.0).abs() < 0.01, "{slope}");
    }
}
