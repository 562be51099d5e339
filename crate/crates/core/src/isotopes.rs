//! Nuclear gyromagnetic ratios and coincidental harmonic overlaps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Harmonic;

const BUILTIN: &str = include_str!("../data/isotopes.txt");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotopeRecord {
    pub symbol: String,
    /// |γ_n| / 2π, MHz/T.
    pub gamma_mhz_per_t: f64,
}

impl IsotopeRecord {
    /// γ_n in rad/s/T.
    pub fn gamma_rad(&self) -> f64 {
        crate::model::units::mhz_per_t_to_rad(self.gamma_mhz_per_t)
    }
}

/// Larmor frequency in Hz at field `b` (tesla).
pub fn larmor_frequency(iso: &IsotopeRecord, b: f64) -> f64 {
    iso.gamma_mhz_per_t * 1e6 * b
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsotopeDb {
    records: Vec<IsotopeRecord>,
}

impl IsotopeDb {
    /// The database shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("bundled isotope table is valid")
    }

    /// Parses `symbol gamma_mhz_per_t` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::IsotopeParse {
                line: i + 1,
                message,
            };
            let mut parts = line.split_whitespace();
            let (Some(symbol), Some(gamma), None) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(err(format!("expected 'symbol gamma', got '{line}'")));
            };
            let gamma: f64 = gamma
                .parse()
                .map_err(|_| err(format!("bad gamma '{gamma}'")))?;
            if !(gamma > 0.0) {
                return Err(err(format!("gamma must be positive, got {gamma}")));
            }
            if records.iter().any(|r: &IsotopeRecord| r.symbol == symbol) {
                return Err(err(format!("duplicate isotope {symbol}")));
            }
            records.push(IsotopeRecord {
                symbol: symbol.to_string(),
                gamma_mhz_per_t: gamma,
            });
        }
        Ok(IsotopeDb { records })
    }

    pub fn records(&self) -> &[IsotopeRecord] {
        &self.records
    }

    pub fn get(&self, symbol: &str) -> Result<&IsotopeRecord> {
        self.records
            .iter()
            .find(|r| r.symbol.eq_ignore_ascii_case(symbol))
            .ok_or_else(|| Error::UnknownIsotope(symbol.to_string()))
    }

    /// Restricts the database to `symbols`, in that order.
    pub fn subset(&self, symbols: &[&str]) -> Result<IsotopeDb> {
        let records = symbols
            .iter()
            .map(|s| self.get(s).cloned())
            .collect::<Result<_>>()?;
        Ok(IsotopeDb { records })
    }
}

/// Isotopes, harmonics and cutoff of the default overlap report.
pub const REPORT_ISOTOPES: [&str; 5] = ["1H", "2H", "13C", "29Si", "31P"];
pub const REPORT_HARMONICS: [(u32, u32); 5] = [(4, 1), (2, 13), (1, 5), (4, 5), (2, 5)];
pub const REPORT_CUTOFF: f64 = 0.0125;

pub fn report_harmonics() -> Vec<Harmonic> {
    REPORT_HARMONICS
        .iter()
        .map(|&(num, den)| Harmonic { num, den })
        .collect()
}

/// Anomalous harmonics are m/k with m ∈ {2, 4, 8}; everything else is an
/// ordinary (sub)harmonic.
pub fn is_anomalous(h: Harmonic) -> bool {
    matches!(h.num, 2 | 4 | 8) && h.den % 2 == 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapEntry {
    pub target: String,
    pub mimic: String,
    pub harmonic: Harmonic,
    pub anomalous: bool,
    /// Target fundamental, MHz.
    pub target_mhz: f64,
    /// Mimic harmonic frequency, MHz.
    pub mimic_mhz: f64,
    pub relative_difference: f64,
}

/// All (target, mimic, harmonic) triples whose frequencies agree to better
/// than `max_relative`, sorted by the relative difference.
pub fn overlap_table(
    db: &IsotopeDb,
    harmonics: &[Harmonic],
    b: f64,
    max_relative: f64,
) -> Vec<OverlapEntry> {
    let mut out = Vec::new();
    for target in db.records() {
        let ft = larmor_frequency(target, b);
        for mimic in db.records() {
            for &h in harmonics {
                if mimic.symbol == target.symbol {
                    continue;
                }
                let fm = larmor_frequency(mimic, b) * h.value();
                let rel = (fm - ft).abs() / ft;
                if rel < max_relative {
                    out.push(OverlapEntry {
                        target: target.symbol.clone(),
                        mimic: mimic.symbol.clone(),
                        harmonic: h,
                        anomalous: is_anomalous(h),
                        target_mhz: ft * 1e-6,
                        mimic_mhz: fm * 1e-6,
                        relative_difference: rel,
                    });
                }
            }
        }
    }
    out.sort_by(|a, b| a.relative_difference.total_cmp(&b.relative_difference));
    out
}

fn harmonic_label(e: &OverlapEntry) -> String {
    format!("{}x{}", e.harmonic, if e.anomalous { "" } else { "*" })
}

pub fn overlaps_to_csv(rows: &[OverlapEntry]) -> String {
    let mut out = String::from(
        "# schema=1\ntarget,target_mhz,mimic,harmonic,anomalous,mimic_mhz,rel_diff_percent\n",
    );
    for e in rows {
        let _ = writeln!(
            out,
            "{},{:.3},{},{},{},{:.3},{:.1}",
            e.target,
            e.target_mhz,
            e.mimic,
            e.harmonic,
            e.anomalous,
            e.mimic_mhz,
            100.0 * e.relative_difference
        );
    }
    out
}

pub fn overlaps_to_markdown(rows: &[OverlapEntry]) -> String {
    let mut out = String::from(
        "| Isotope | Frequency | Mimicking isotope | Harmonic | Harmonic frequency | Rel. freq. difference |\n\
         |---|---|---|---|---|---|\n",
    );
    for e in rows {
        let _ = writeln!(
            out,
            "| {} | {:.3} MHz | {} | {} | {:.3} MHz | {:.1}% |",
            e.target,
            e.target_mhz,
            e.mimic,
            harmonic_label(e),
            e.mimic_mhz,
            100.0 * e.relative_difference
        );
    }
    out.push_str("\n*ordinary (not anomalous) harmonic\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(s: &str) -> Harmonic {
        s.parse().unwrap()
    }

    #[test]
    fn builtin_has_required_isotopes() {
        let db = IsotopeDb::builtin();
        for s in ["1H", "2H", "13C", "19F", "29Si", "31P"] {
            assert!(db.get(s).unwrap().gamma_mhz_per_t > 0.0);
        }
        assert!(matches!(db.get("7Li"), Err(Error::UnknownIsotope(_))));
    }

    #[test]
    fn larmor_examples() {
        let db = IsotopeDb::builtin();
        assert!((larmor_frequency(db.get("1H").unwrap(), 0.1) * 1e-6 - 4.257).abs() < 1e-3);
        assert!((larmor_frequency(db.get("31P").unwrap(), 0.1) * 1e-6 - 1.723).abs() < 1e-3);
        assert_eq!(larmor_frequency(db.get("13C").unwrap(), 0.0), 0.0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(
            IsotopeDb::parse("1H 42.5\nbad\n"),
            Err(Error::IsotopeParse { line: 2, .. })
        ));
        assert!(matches!(
            IsotopeDb::parse("# c\n1H -1\n"),
            Err(Error::IsotopeParse { line: 2, .. })
        ));
        assert!(matches!(
            IsotopeDb::parse("1H 1\n1H 2\n"),
            Err(Error::IsotopeParse { line: 2, .. })
        ));
        assert_eq!(
            IsotopeDb::parse("# only comments\n\n")
                .unwrap()
                .records()
                .len(),
            0
        );
    }

    #[test]
    fn self_pairs_excluded() {
        let db = IsotopeDb::builtin();
        let rows = overlap_table(&db, &[h("1"), h("4")], 0.1, 1.0);
        assert!(rows.iter().all(|r| r.target != r.mimic));
    }

    #[test]
    fn proton_carbon_row() {
        let db = IsotopeDb::builtin();
        let rows = overlap_table(&db.subset(&["1H", "13C"]).unwrap(), &[h("4")], 0.1, 0.01);
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!((r.target.as_str(), r.mimic.as_str()), ("1H", "13C"));
        assert!((r.mimic_mhz - 4.282).abs() < 5e-4);
        assert_eq!(format!("{:.1}", 100.0 * r.relative_difference), "0.6");
    }

    #[test]
    fn field_invariance() {
        let db = IsotopeDb::builtin();
        let hs = [h("4"), h("2/5"), h("4/5")];
        let base = overlap_table(&db, &hs, 0.1, 0.05);
        for b in [0.05, 0.3] {
            let other = overlap_table(&db, &hs, b, 0.05);
            assert_eq!(base.len(), other.len());
            for (x, y) in base.iter().zip(&other) {
                assert!((x.relative_difference - y.relative_difference).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn anomalous_labels() {
        assert!(is_anomalous(h("4/5")));
        assert!(is_anomalous(h("2/13")));
        assert!(!is_anomalous(h("1/5")));
        assert!(!is_anomalous(h("1")));
    }

    #[test]
    fn report_formats() {
        let db = IsotopeDb::builtin().subset(&["29Si", "1H"]).unwrap();
        let rows = overlap_table(&db, &[h("1/5")], 0.1, 0.01);
        assert!(overlaps_to_csv(&rows).contains("29Si,0.846,1H,1/5,false,0.852,0.7"));
        assert!(overlaps_to_markdown(&rows).contains("| 1/5x* |"));
    }
}
