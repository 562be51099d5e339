//! Parameter sweeps, peak detection, harmonic classification and the
//! anomalous-phase extraction.

pub mod extract;
pub mod peaks;
pub mod sweep;

pub use extract::{
    extract_anomalous_phase, extract_anomalous_phase_with, relative_strength_check, run_table1,
    superperiod, table1_report, table1_to_csv, ExtractOptions, Extraction, StrengthCheck,
    Table1Check,
};
pub use peaks::{
    classify_harmonics, field_peaks_to_csv, find_peaks, fit_line, group_resonances,
    nearest_harmonic, peaks_to_csv, sweep_field, FieldPeak, FieldWindow, Peak,
};
pub use sweep::{
    auto_grid, linear_grid, required_points, sweep_map, sweep_spectrum, sweep_time_evolution,
    time_evolution_to_csv, MapSweep, SpectrumSweep, SweepSetup, TimePoint,
};
