use serde::{Deserialize, Serialize};

use super::cmatrix::{CMatrix, C64};

/// Which spin a set of operators describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinSpecies {
    ElectronQubit,
    NuclearHalf,
    NuclearOne,
}

/// Dimensionless angular momentum operators. Spin-1/2 uses `S = sigma / 2`.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub species: SpinSpecies,
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

impl SpinOperators {
    pub fn spin_half() -> Self {
        Self::half(SpinSpecies::ElectronQubit)
    }

    pub fn for_species(species: SpinSpecies) -> Self {
        match species {
            SpinSpecies::ElectronQubit | SpinSpecies::NuclearHalf => Self::half(species),
            SpinSpecies::NuclearOne => Self::one(),
        }
    }

    fn half(species: SpinSpecies) -> Self {
        let z0 = c(0.0, 0.0);
        SpinOperators {
            species,
            x: CMatrix::from_rows(2, &[z0, c(0.5, 0.0), c(0.5, 0.0), z0]),
            y: CMatrix::from_rows(2, &[z0, c(0.0, -0.5), c(0.0, 0.5), z0]),
            z: CMatrix::from_real_diagonal(&[0.5, -0.5]),
        }
    }

    fn one() -> Self {
        let z0 = c(0.0, 0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        SpinOperators {
            species: SpinSpecies::NuclearOne,
            x: CMatrix::from_rows(
                3,
                &[
                    z0,
                    c(s, 0.0),
                    z0,
                    c(s, 0.0),
                    z0,
                    c(s, 0.0),
                    z0,
                    c(s, 0.0),
                    z0,
                ],
            ),
            y: CMatrix::from_rows(
                3,
                &[
                    z0,
                    c(0.0, -s),
                    z0,
                    c(0.0, s),
                    z0,
                    c(0.0, -s),
                    z0,
                    c(0.0, s),
                    z0,
                ],
            ),
            z: CMatrix::from_real_diagonal(&[1.0, 0.0, -1.0]),
        }
    }

    pub fn dim(&self) -> usize {
        self.z.dim()
    }

    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.dim())
    }
}
