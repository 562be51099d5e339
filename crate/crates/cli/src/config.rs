//! Run configuration: a TOML file, command-line overrides, and the
//! validated simulation parameters derived from both.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spurious_core::analysis::peaks::{FieldWindow, DEFAULT_THRESHOLD, DEFAULT_TOLERANCE};
use spurious_core::analysis::sweep::SweepSetup;
use spurious_core::isotopes::{IsotopeDb, REPORT_CUTOFF, REPORT_HARMONICS, REPORT_ISOTOPES};
use spurious_core::model::units;
use spurious_core::{
    ClassicalSignal, Engine, Harmonic, NuclearSpin, PulseMode, QuantumSignal, SensorSpec,
    SequenceKind, SequenceSpec, Signal,
};

/// A problem with the configuration, reported with the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn field_err(field: &str, e: impl fmt::Display) -> ConfigError {
    ConfigError(format!("{field}: {e}"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sequence: SequenceConfig,
    pub sensor: SensorConfig,
    pub signal: SignalConfig,
    pub engine: EngineConfig,
    pub sweep: SweepConfig,
    pub map: MapConfig,
    pub timeev: TimeConfig,
    pub fieldsweep: FieldConfig,
    pub table1: Table1Config,
    pub overlaps: OverlapConfig,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sequence: SequenceConfig::default(),
            sensor: SensorConfig::default(),
            signal: SignalConfig::Quantum(QuantumBlock {
                gamma_mhz_per_t: Some(20.0),
                ..QuantumBlock::default()
            }),
            engine: EngineConfig::default(),
            sweep: SweepConfig::default(),
            map: MapConfig::default(),
            timeev: TimeConfig::default(),
            fieldsweep: FieldConfig::default(),
            table1: Table1Config::default(),
            overlaps: OverlapConfig::default(),
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceConfig {
    pub kind: String,
    pub pulses: usize,
    pub ideal_pulses: bool,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig {
            kind: "xy8".into(),
            pulses: 480,
            ideal_pulses: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub rabi_mhz: f64,
    pub detuning_mhz: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            rabi_mhz: 20.0,
            detuning_mhz: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SignalConfig {
    Quantum(QuantumBlock),
    Classical(ClassicalBlock),
}

/// Nuclear spin; give either `isotope` or `gamma_mhz_per_t`. The built-in
/// default config precesses at 2 MHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantumBlock {
    pub a_perp_khz: f64,
    pub a_par_khz: f64,
    pub isotope: Option<String>,
    pub gamma_mhz_per_t: Option<f64>,
    pub field_mt: f64,
    pub spin: NuclearSpin,
}

impl Default for QuantumBlock {
    fn default() -> Self {
        QuantumBlock {
            a_perp_khz: 400.0,
            a_par_khz: 0.0,
            isotope: None,
            gamma_mhz_per_t: None,
            field_mt: 100.0,
            spin: NuclearSpin::Half,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalBlock {
    pub amplitude_khz: f64,
    pub f_ac_mhz: f64,
    pub phase_deg: f64,
}

impl Default for ClassicalBlock {
    fn default() -> Self {
        ClassicalBlock {
            amplitude_khz: 200.0,
            f_ac_mhz: 2.0,
            phase_deg: 0.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// `quantum` or `classical`; follows the signal type when absent.
    pub kind: Option<String>,
    /// Classical pulse step, ns.
    pub dt_ns: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub fmin_mhz: f64,
    pub fmax_mhz: f64,
    pub fpoints: usize,
    /// Add points until the narrowest resonance is resolved.
    pub refine: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            fmin_mhz: 1.6,
            fmax_mhz: 6.0,
            fpoints: 500,
            refine: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    /// Detection frequency as a multiple of the signal frequency.
    pub harmonic: String,
    pub amp_min_khz: f64,
    pub amp_max_khz: f64,
    pub amp_points: usize,
    pub det_max_mhz: f64,
    pub det_points: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig {
            harmonic: "2".into(),
            amp_min_khz: 20.0,
            amp_max_khz: 400.0,
            amp_points: 20,
            det_max_mhz: 2.0,
            det_points: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub harmonic: String,
    pub t_max_us: f64,
    pub points: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            harmonic: "1".into(),
            t_max_us: 200.0,
            points: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub ratio: f64,
    pub half_width: f64,
    pub points: usize,
    #[serde(default)]
    pub pulses: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub fields_mt: Vec<f64>,
    pub windows: Vec<WindowConfig>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            fields_mt: vec![100.0, 150.0, 200.0],
            windows: vec![WindowConfig {
                ratio: 1.0,
                half_width: 0.25,
                points: 601,
                pulses: None,
            }],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Table1Config {
    /// θ_eff of the probe signal.
    pub theta: f64,
    pub gated_detuning_mhz: f64,
    pub phases: usize,
    /// Signal frequency; a fortieth of the Rabi frequency when absent.
    pub f_ac_mhz: Option<f64>,
}

impl Default for Table1Config {
    fn default() -> Self {
        Table1Config {
            theta: 0.01,
            gated_detuning_mhz: 1.0,
            phases: 64,
            f_ac_mhz: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapConfig {
    /// Alternative isotope table; the bundled one when absent.
    pub database: Option<PathBuf>,
    pub isotopes: Vec<String>,
    pub harmonics: Vec<String>,
    pub cutoff_percent: f64,
    pub field_mt: f64,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        OverlapConfig {
            database: None,
            isotopes: REPORT_ISOTOPES.iter().map(|s| s.to_string()).collect(),
            harmonics: REPORT_HARMONICS
                .iter()
                .map(|&(n, d)| Harmonic { num: n, den: d }.to_string())
                .collect(),
            cutoff_percent: 100.0 * REPORT_CUTOFF,
            field_mt: 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub threshold: f64,
    pub tol: f64,
    /// Maxima closer than this many filter widths form one resonance.
    pub link: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            threshold: DEFAULT_THRESHOLD,
            tol: DEFAULT_TOLERANCE,
            link: 8.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seq: Option<String>,
    pub pulses: Option<usize>,
    pub rabi_mhz: Option<f64>,
    pub detuning_mhz: Option<f64>,
    pub ideal_pulses: bool,
    pub fmin_mhz: Option<f64>,
    pub fmax_mhz: Option<f64>,
    pub fpoints: Option<usize>,
    pub threshold: Option<f64>,
    pub tol: Option<f64>,
    pub field_mt: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("malformed config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.out {
            self.output.path = Some(p.clone());
        }
        if o.threads.is_some() {
            self.output.threads = o.threads;
        }
        if let Some(s) = &o.seq {
            self.sequence.kind = s.clone();
        }
        if let Some(n) = o.pulses {
            self.sequence.pulses = n;
        }
        if let Some(r) = o.rabi_mhz {
            self.sensor.rabi_mhz = r;
        }
        if let Some(d) = o.detuning_mhz {
            self.sensor.detuning_mhz = d;
        }
        if o.ideal_pulses {
            self.sequence.ideal_pulses = true;
        }
        if let Some(f) = o.fmin_mhz {
            self.sweep.fmin_mhz = f;
        }
        if let Some(f) = o.fmax_mhz {
            self.sweep.fmax_mhz = f;
        }
        if let Some(n) = o.fpoints {
            self.sweep.fpoints = n;
        }
        if let Some(t) = o.threshold {
            self.analysis.threshold = t;
        }
        if let Some(t) = o.tol {
            self.analysis.tol = t;
        }
        if let Some(b) = o.field_mt {
            self.overlaps.field_mt = b;
            if let SignalConfig::Quantum(q) = &mut self.signal {
                q.field_mt = b;
            }
        }
    }

    pub fn kind(&self) -> Result<SequenceKind, ConfigError> {
        self.sequence
            .kind
            .parse()
            .map_err(|e| field_err("sequence.kind", e))
    }

    pub fn mode(&self) -> PulseMode {
        if self.sequence.ideal_pulses {
            PulseMode::Ideal
        } else {
            PulseMode::Finite
        }
    }

    pub fn sensor(&self) -> Result<SensorSpec, ConfigError> {
        if !(self.sensor.rabi_mhz > 0.0) {
            return Err(field_err(
                "sensor.rabi_mhz",
                format!("must be positive, got {}", self.sensor.rabi_mhz),
            ));
        }
        if !self.sensor.detuning_mhz.is_finite() {
            return Err(field_err("sensor.detuning_mhz", "must be finite"));
        }
        SensorSpec::new(
            units::mhz_to_rad_s(self.sensor.detuning_mhz),
            units::mhz_to_rad_s(self.sensor.rabi_mhz),
        )
        .map_err(|e| field_err("sensor", e))
    }

    pub fn signal(&self) -> Result<Signal, ConfigError> {
        match &self.signal {
            SignalConfig::Quantum(q) => {
                let gamma = match (&q.isotope, q.gamma_mhz_per_t) {
                    (Some(sym), None) => {
                        IsotopeDb::builtin()
                            .get(sym)
                            .map_err(|e| field_err("signal.isotope", e))?
                            .gamma_mhz_per_t
                    }
                    (None, Some(g)) if g > 0.0 => g,
                    (None, Some(g)) => {
                        return Err(field_err(
                            "signal.gamma_mhz_per_t",
                            format!("must be positive, got {g}"),
                        ))
                    }
                    _ => {
                        return Err(field_err(
                            "signal",
                            "give exactly one of isotope or gamma_mhz_per_t",
                        ))
                    }
                };
                if !(q.field_mt > 0.0) {
                    return Err(field_err(
                        "signal.field_mt",
                        format!("must be positive, got {}", q.field_mt),
                    ));
                }
                let s = QuantumSignal::new(
                    units::khz_to_rad_s(q.a_perp_khz),
                    units::khz_to_rad_s(q.a_par_khz),
                    units::mhz_per_t_to_rad(gamma),
                    units::mt_to_t(q.field_mt),
                    q.spin,
                )
                .map_err(|e| field_err("signal.a_perp_khz", e))?;
                if !(s.omega0() > 0.0) {
                    return Err(field_err(
                        "signal",
                        "nuclear precession frequency must be positive",
                    ));
                }
                Ok(Signal::Quantum(s))
            }
            SignalConfig::Classical(c) => ClassicalSignal::new(
                units::khz_to_rad_s(c.amplitude_khz),
                units::mhz_to_hz(c.f_ac_mhz),
                c.phase_deg.to_radians(),
            )
            .map(Signal::Classical)
            .map_err(|e| field_err("signal.f_ac_mhz", e)),
        }
    }

    pub fn engine(&self) -> Result<Engine, ConfigError> {
        let quantum_signal = matches!(self.signal, SignalConfig::Quantum(_));
        let dt = match self.engine.dt_ns {
            Some(d) if d > 0.0 => Some(units::ns_to_s(d)),
            Some(d) => {
                return Err(field_err(
                    "engine.dt_ns",
                    format!("must be positive, got {d}"),
                ))
            }
            None => None,
        };
        match self.engine.kind.as_deref() {
            None if quantum_signal => Ok(Engine::Quantum),
            None | Some("classical") => Ok(Engine::Classical { dt }),
            Some("quantum") if quantum_signal => Ok(Engine::Quantum),
            Some("quantum") => Err(field_err(
                "engine.kind",
                "the quantum engine needs a quantum signal",
            )),
            Some(other) => Err(field_err(
                "engine.kind",
                format!("unknown engine '{other}' (expected quantum or classical)"),
            )),
        }
    }

    pub fn setup(&self) -> Result<SweepSetup, ConfigError> {
        let kind = self.kind()?;
        spurious_core::model::check_pulse_count(kind, self.sequence.pulses)
            .map_err(|e| field_err("sequence.pulses", e))?;
        Ok(SweepSetup {
            kind,
            pulses: self.sequence.pulses,
            mode: self.mode(),
            sensor: self.sensor()?,
            signal: self.signal()?,
            engine: self.engine()?,
        })
    }

    pub fn threads(&self) -> Result<Option<usize>, ConfigError> {
        match self.output.threads {
            Some(0) => Err(field_err("threads", "must be at least 1")),
            t => Ok(t),
        }
    }

    pub fn map_harmonic(&self) -> Result<Harmonic, ConfigError> {
        self.map
            .harmonic
            .parse()
            .map_err(|e| field_err("map.harmonic", e))
    }

    pub fn time_harmonic(&self) -> Result<Harmonic, ConfigError> {
        self.timeev
            .harmonic
            .parse()
            .map_err(|e| field_err("timeev.harmonic", e))
    }

    pub fn field_windows(&self) -> Result<Vec<FieldWindow>, ConfigError> {
        if self.fieldsweep.windows.is_empty() {
            return Err(field_err(
                "fieldsweep.windows",
                "at least one window is required",
            ));
        }
        self.fieldsweep
            .windows
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let name = format!("fieldsweep.windows[{i}]");
                if !(w.ratio > 0.0) || !(w.half_width > 0.0 && w.half_width < 1.0) || w.points < 3 {
                    return Err(field_err(
                        &name,
                        "need ratio > 0, 0 < half_width < 1 and at least 3 points",
                    ));
                }
                if let Some(n) = w.pulses {
                    spurious_core::model::check_pulse_count(self.kind()?, n)
                        .map_err(|e| field_err(&name, e))?;
                }
                Ok(FieldWindow {
                    ratio: w.ratio,
                    half_width: w.half_width,
                    points: w.points,
                    pulses: w.pulses,
                })
            })
            .collect()
    }

    pub fn overlap_harmonics(&self) -> Result<Vec<Harmonic>, ConfigError> {
        self.overlaps
            .harmonics
            .iter()
            .map(|h| h.parse().map_err(|e| field_err("overlaps.harmonics", e)))
            .collect()
    }

    pub fn isotope_db(&self) -> Result<IsotopeDb, ConfigError> {
        let db = match &self.overlaps.database {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    field_err(
                        "overlaps.database",
                        format!("cannot read {}: {e}", p.display()),
                    )
                })?;
                IsotopeDb::parse(&text).map_err(|e| field_err("overlaps.database", e))?
            }
            None => IsotopeDb::builtin(),
        };
        let symbols: Vec<&str> = self.overlaps.isotopes.iter().map(String::as_str).collect();
        db.subset(&symbols)
            .map_err(|e| field_err("overlaps.isotopes", e))
    }

    /// Checks every section so that mistakes surface before any work starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.setup()?;
        self.threads()?;
        let s = &self.sweep;
        if !(s.fmin_mhz > 0.0 && s.fmax_mhz > s.fmin_mhz) || s.fpoints < 2 {
            return Err(field_err(
                "sweep",
                "need 0 < fmin_mhz < fmax_mhz and fpoints >= 2",
            ));
        }
        let m = &self.map;
        self.map_harmonic()?;
        if !(m.amp_min_khz >= 0.0 && m.amp_max_khz >= m.amp_min_khz)
            || m.amp_points < 1
            || m.det_points < 1
        {
            return Err(field_err(
                "map",
                "need 0 <= amp_min_khz <= amp_max_khz and at least one point per axis",
            ));
        }
        if !m.det_max_mhz.is_finite() {
            return Err(field_err("map.det_max_mhz", "must be finite"));
        }
        self.time_harmonic()?;
        if !(self.timeev.t_max_us > 0.0) || self.timeev.points < 1 {
            return Err(field_err(
                "timeev",
                "need t_max_us > 0 and at least one point",
            ));
        }
        if self.fieldsweep.fields_mt.iter().any(|b| !(*b > 0.0)) {
            return Err(field_err("fieldsweep.fields_mt", "fields must be positive"));
        }
        self.field_windows()?;
        let t = &self.table1;
        if !(t.theta > 0.0 && t.theta <= 0.01) {
            return Err(field_err(
                "table1.theta",
                format!("must lie in (0, 0.01], got {}", t.theta),
            ));
        }
        if t.phases < 2 || !t.phases.is_multiple_of(2) {
            return Err(field_err("table1.phases", "must be even and at least 2"));
        }
        if t.f_ac_mhz.is_some_and(|f| !(f > 0.0)) {
            return Err(field_err("table1.f_ac_mhz", "must be positive"));
        }
        self.overlap_harmonics()?;
        self.isotope_db()?;
        if !(self.overlaps.cutoff_percent > 0.0) || !(self.overlaps.field_mt > 0.0) {
            return Err(field_err(
                "overlaps",
                "cutoff_percent and field_mt must be positive",
            ));
        }
        let a = &self.analysis;
        if !(a.threshold >= 0.0 && a.threshold < 1.0) || !(a.tol > 0.0) || !(a.link > 0.0) {
            return Err(field_err(
                "analysis",
                "need 0 <= threshold < 1, tol > 0 and link > 0",
            ));
        }
        Ok(())
    }
}

/// Interpulse delay for detection at `h · f_ac`, checked against the pulse length.
pub fn detection_tau(cfg: &RunConfig, h: Harmonic) -> Result<(f64, f64), ConfigError> {
    let setup = cfg.setup()?;
    let f = h.value() * setup.signal.f_ac();
    let tau = spurious_core::tau_for_frequency(f).map_err(|e| field_err("harmonic", e))?;
    SequenceSpec::new(setup.kind, setup.kind.block_len(), tau, setup.mode)
        .and_then(|s| s.check_fits(&setup.sensor))
        .map_err(|e| field_err("harmonic", e))?;
    Ok((f, tau))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_field_is_rejected_with_location() {
        let e = RunConfig::parse("[sensor]\nrabi_mhz = 20\nrabbi = 3\n").unwrap_err();
        assert!(e.0.contains("rabbi") && e.0.contains("line 3"), "{e}");
    }

    #[test]
    fn signal_block_variants() {
        let c = RunConfig::parse(
            "[signal]\ntype = \"classical\"\namplitude_khz = 100\nf_ac_mhz = 1.5\n",
        )
        .unwrap();
        assert!(matches!(c.signal().unwrap(), Signal::Classical(_)));
        assert_eq!(c.engine().unwrap(), Engine::Classical { dt: None });
        let q = RunConfig::parse(
            "[signal]\ntype = \"quantum\"\nisotope = \"13C\"\ngamma_mhz_per_t = 10\n",
        )
        .unwrap();
        assert!(q.validate().unwrap_err().0.contains("exactly one"));
        let bad = RunConfig::parse("[signal]\ntype = \"magnetic\"\n");
        assert!(bad.is_err());
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let c = RunConfig::parse("[sequence]\nkind = \"xy8\"\npulses = 12\n").unwrap();
        assert!(c.validate().unwrap_err().0.starts_with("sequence.pulses"));
        let c = RunConfig::parse("[sensor]\nrabi_mhz = -1\n").unwrap();
        assert!(c.validate().unwrap_err().0.starts_with("sensor.rabi_mhz"));
        let c = RunConfig::parse("[engine]\nkind = \"quantum\"\n[signal]\ntype = \"classical\"\n")
            .unwrap();
        assert!(c.validate().unwrap_err().0.starts_with("engine.kind"));
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = RunConfig::parse("[sequence]\nkind = \"xy4\"\npulses = 40\n").unwrap();
        c.apply(&Overrides {
            seq: Some("xy16".into()),
            pulses: Some(64),
            field_mt: Some(182.0),
            ..Default::default()
        });
        assert_eq!(c.kind().unwrap(), SequenceKind::Xy16);
        assert_eq!(c.sequence.pulses, 64);
        assert_eq!(c.overlaps.field_mt, 182.0);
        let SignalConfig::Quantum(q) = &c.signal else {
            panic!()
        };
        assert_eq!(q.field_mt, 182.0);
    }
}
