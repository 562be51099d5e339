//! One function per subcommand. Each returns the CSV body, a JSON summary
//! and a one-line description of the result.

use serde_json::{json, Value};
use spurious_core::analysis::extract::{run_table1, table1_report, table1_to_csv, ExtractOptions};
use spurious_core::analysis::peaks::{
    classify_harmonics, field_peaks_to_csv, find_peaks, fit_line, group_resonances, sweep_field,
};
use spurious_core::analysis::sweep::{
    auto_grid, linear_grid, sweep_map, sweep_spectrum, sweep_time_evolution, time_evolution_to_csv,
};
use spurious_core::isotopes::{overlap_table, overlaps_to_csv, overlaps_to_markdown};
use spurious_core::model::units;

use crate::config::{detection_tau, ConfigError, RunConfig};

pub struct Artifact {
    pub csv: String,
    pub summary: Value,
    pub line: String,
    /// Extra text for stdout, printed before the summary line.
    pub report: Option<String>,
    /// A regression check failed.
    pub failed: bool,
}

impl Artifact {
    fn new(csv: String, summary: Value, line: String) -> Self {
        Artifact {
            csv,
            summary,
            line,
            report: None,
            failed: false,
        }
    }
}

#[derive(Debug)]
pub enum CommandError {
    Config(ConfigError),
    Run(spurious_core::Error),
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Config(e)
    }
}

impl From<spurious_core::Error> for CommandError {
    fn from(e: spurious_core::Error) -> Self {
        CommandError::Run(e)
    }
}

type Outcome = Result<Artifact, CommandError>;

fn mhz(f: f64) -> f64 {
    f * 1e-6
}

pub fn spectrum(cfg: &RunConfig) -> Outcome {
    let setup = cfg.setup()?;
    let s = &cfg.sweep;
    let (lo, hi) = (units::mhz_to_hz(s.fmin_mhz), units::mhz_to_hz(s.fmax_mhz));
    let grid = if s.refine {
        auto_grid(lo, hi, s.fpoints, setup.pulses)?
    } else {
        linear_grid(lo, hi, s.fpoints)?
    };
    let sw = sweep_spectrum(&grid, &setup)?;
    let raw = find_peaks(&sw, cfg.analysis.threshold);
    let lines = classify_harmonics(
        &group_resonances(&raw, setup.pulses, cfg.analysis.link),
        setup.signal.f_ac(),
        cfg.analysis.tol,
    );
    let listed: Vec<Value> = lines
        .iter()
        .map(|p| {
            json!({
                "f_hz": p.frequency,
                "p": p.height,
                "ratio": p.ratio.map(|h| h.to_string()),
                "residual": p.residual,
                "members": p.members,
            })
        })
        .collect();
    let names: Vec<String> = lines
        .iter()
        .map(|p| {
            format!(
                "{:.3} MHz ({})",
                mhz(p.frequency),
                p.ratio.map_or("unassigned".to_string(), |h| h.to_string())
            )
        })
        .collect();
    let summary = json!({
        "points": sw.freqs.len(),
        "flagged": sw.flagged(),
        "max_p": sw.max_p(),
        "f_ac_hz": setup.signal.f_ac(),
        "raw_maxima": raw.len(),
        "resonances": listed,
    });
    let line = format!(
        "spectrum: {} points, max p {:.3}, {} resonances: {}",
        sw.freqs.len(),
        sw.max_p(),
        lines.len(),
        if names.is_empty() {
            "none".to_string()
        } else {
            names.join(", ")
        }
    );
    Ok(Artifact::new(sw.to_csv(), summary, line))
}

pub fn map(cfg: &RunConfig) -> Outcome {
    let setup = cfg.setup()?;
    let m = &cfg.map;
    let (f, _) = detection_tau(cfg, cfg.map_harmonic()?)?;
    let amps: Vec<f64> = if m.amp_points == 1 {
        vec![units::khz_to_rad_s(m.amp_max_khz)]
    } else {
        (0..m.amp_points)
            .map(|i| {
                units::khz_to_rad_s(
                    m.amp_min_khz
                        + (m.amp_max_khz - m.amp_min_khz) * i as f64 / (m.amp_points - 1) as f64,
                )
            })
            .collect()
    };
    let dets: Vec<f64> = if m.det_points == 1 {
        vec![0.0]
    } else {
        (0..m.det_points)
            .map(|i| units::mhz_to_rad_s(m.det_max_mhz * i as f64 / (m.det_points - 1) as f64))
            .collect()
    };
    let sw = sweep_map(&amps, &dets, f, &setup)?;
    let detuned = (1..dets.len()).map(|d| sw.row_max(d)).fold(0.0, f64::max);
    let summary = json!({
        "frequency_hz": f,
        "max_p": sw.max_p(),
        "max_p_undetuned": sw.row_max(0),
        "max_p_detuned": detuned,
    });
    let line = format!(
        "map: {}x{} at {:.3} MHz, max p {:.3} without detuning, {:.3} with",
        amps.len(),
        dets.len(),
        mhz(f),
        sw.row_max(0),
        detuned
    );
    Ok(Artifact::new(sw.to_csv(), summary, line))
}

pub fn timeev(cfg: &RunConfig) -> Outcome {
    let setup = cfg.setup()?;
    let t = &cfg.timeev;
    let (f, tau) = detection_tau(cfg, cfg.time_harmonic()?)?;
    let block = setup.kind.block_len();
    let max_blocks = ((t.t_max_us * 1e-6 / tau) / block as f64).floor() as usize;
    let mut ns: Vec<usize> = (0..=t.points)
        .map(|i| block * ((max_blocks as f64 * i as f64 / t.points as f64).round() as usize))
        .collect();
    ns.dedup();
    let series = sweep_time_evolution(&ns, f, &setup)?;
    let best = series
        .iter()
        .copied()
        .max_by(|a, b| a.p.total_cmp(&b.p))
        .expect("at least the empty sequence");
    let summary = json!({
        "frequency_hz": f,
        "tau_s": tau,
        "points": series.len(),
        "max_p": best.p,
        "max_p_time_s": best.total_time,
    });
    let line = format!(
        "timeev: {} points at {:.3} MHz up to {:.1} us, max p {:.3} at {:.1} us",
        series.len(),
        mhz(f),
        series.last().map_or(0.0, |s| s.total_time * 1e6),
        best.p,
        best.total_time * 1e6
    );
    Ok(Artifact::new(time_evolution_to_csv(&series), summary, line))
}

pub fn fieldsweep(cfg: &RunConfig) -> Outcome {
    let setup = cfg.setup()?;
    if !matches!(setup.signal, spurious_core::Signal::Quantum(_)) {
        return Err(ConfigError("signal: a field sweep needs a quantum signal".into()).into());
    }
    let windows = cfg.field_windows()?;
    let fields: Vec<f64> = cfg
        .fieldsweep
        .fields_mt
        .iter()
        .map(|&b| units::mt_to_t(b))
        .collect();
    let pts = sweep_field(&fields, &windows, &setup, cfg.analysis.threshold)?;
    let mut slopes = Vec::new();
    let mut parts = Vec::new();
    for (w, win) in windows.iter().enumerate() {
        let line: Vec<(f64, f64)> = pts
            .iter()
            .filter(|p| p.window == w)
            .map(|p| (p.field, p.frequency))
            .collect();
        let fit = fit_line(&line);
        slopes.push(json!({
            "ratio": win.ratio,
            "points": line.len(),
            "slope_mhz_per_t": fit.map(|(s, _)| s * 1e-6),
            "intercept_hz": fit.map(|(_, i)| i),
        }));
        parts.push(match fit {
            Some((s, _)) => format!("{}x {:.3} MHz/T", win.ratio, s * 1e-6),
            None => format!("{}x no fit ({} peaks)", win.ratio, line.len()),
        });
    }
    let summary = json!({ "peaks": pts.len(), "slopes": slopes });
    let line = format!(
        "fieldsweep: {} peaks over {} fields, slopes {}",
        pts.len(),
        fields.len(),
        parts.join(", ")
    );
    Ok(Artifact::new(field_peaks_to_csv(&pts), summary, line))
}

pub fn table1(cfg: &RunConfig) -> Outcome {
    let sensor = cfg.sensor()?;
    let t = &cfg.table1;
    let opts = ExtractOptions {
        f_ac: t.f_ac_mhz.map(units::mhz_to_hz),
        phases: t.phases,
        dt: None,
    };
    let checks = run_table1(
        &sensor,
        sensor.rabi * t.theta.tan(),
        units::mhz_to_rad_s(t.gated_detuning_mhz),
        &opts,
    )?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    let summary = json!({ "checks": checks.len(), "failed": failed });
    let line = format!(
        "table1: {} checks, {} failed: {}",
        checks.len(),
        failed,
        if failed == 0 { "PASS" } else { "FAIL" }
    );
    Ok(Artifact {
        report: Some(table1_report(&checks)),
        failed: failed > 0,
        ..Artifact::new(table1_to_csv(&checks), summary, line)
    })
}

pub fn overlaps(cfg: &RunConfig) -> Outcome {
    let db = cfg.isotope_db()?;
    let o = &cfg.overlaps;
    let rows = overlap_table(
        &db,
        &cfg.overlap_harmonics()?,
        units::mt_to_t(o.field_mt),
        o.cutoff_percent / 100.0,
    );
    let summary = json!({ "rows": rows.len(), "field_mt": o.field_mt });
    let line = format!("overlaps: {} rows at {} mT", rows.len(), o.field_mt);
    Ok(Artifact {
        report: Some(overlaps_to_markdown(&rows)),
        ..Artifact::new(overlaps_to_csv(&rows), summary, line)
    })
}
