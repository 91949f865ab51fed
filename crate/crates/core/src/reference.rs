//! Published 100-site reference energies and the clamp settings used for
//! them. Only used for reporting and presets.

use crate::cells::{CellVariant, ClampMode, Geometry};

/// Chain length of the reference calculations.
pub const REFERENCE_SITES: usize = 100;

/// `(J2, E)` for the J1J2 chain with `J1 = 1`.
pub const J1J2_DMRG: [(f64, f64); 4] = [
    (0.0, -44.1277),
    (0.2, -40.7388),
    (0.5, -37.5000),
    (0.8, -42.0701),
];

/// `((J2, J3), E)` for the J1J2J3 chain with `J1 = 1`.
pub const J1J2J3_DMRG: [((f64, f64), f64); 4] = [
    ((0.0, 0.5), -53.9914),
    ((0.2, 0.2), -43.5860),
    ((0.2, 0.5), -49.6287),
    ((0.5, 0.2), -38.5473),
];

/// Training epochs of the two studies.
pub const J1J2_EPOCHS: usize = 1000;
pub const J1J2J3_EPOCHS: usize = 1200;

/// Radii tried for the Poincaré RNN.
pub const TESTED_R_MAX: [f64; 3] = [0.99, 0.618, 0.7];
/// Spatial norms tried for the Lorentz GRU.
pub const TESTED_L_MAX: [f64; 3] = [2.0, 4.0, 6.0];

pub fn dmrg_energy(j2: f64, j3: f64) -> Option<f64> {
    if j3 == 0.0 {
        J1J2_DMRG.iter().find(|(j, _)| *j == j2).map(|&(_, e)| e)
    } else {
        J1J2J3_DMRG
            .iter()
            .find(|((a, b), _)| *a == j2 && *b == j3)
            .map(|&(_, e)| e)
    }
}

fn column(j2: f64, j3: f64) -> Option<usize> {
    if j3 == 0.0 {
        J1J2_DMRG.iter().position(|(j, _)| *j == j2)
    } else {
        J1J2J3_DMRG.iter().position(|((a, b), _)| *a == j2 && *b == j3)
    }
}

/// Reference radius for a Poincaré cell, `None` for other geometries or
/// couplings outside the tables.
pub fn reference_r_max(variant: CellVariant, j2: f64, j3: f64) -> Option<f64> {
    if variant.geometry() != Geometry::Poincare {
        return None;
    }
    let k = column(j2, j3)?;
    let rnn = variant == CellVariant::PoincareRnn;
    Some(match (j3 == 0.0, rnn) {
        (true, true) => [0.618, 0.618, 0.618, 0.7][k],
        (true, false) => 1.0,
        (false, true) => 0.78,
        (false, false) => [0.7, 0.82, 0.95, 0.7][k],
    })
}

/// Reference spatial bound and clamp placement for a Lorentz cell.
pub fn reference_l_max(variant: CellVariant, j2: f64, j3: f64) -> Option<(f64, ClampMode)> {
    use ClampMode::{Double, Single};
    if variant.geometry() != Geometry::Lorentz {
        return None;
    }
    let k = column(j2, j3)?;
    let rnn = variant == CellVariant::LorentzRnn;
    Some(match (j3 == 0.0, rnn) {
        (true, true) => [(4.0, Double), (2.0, Double), (2.0, Single), (4.0, Double)][k],
        (true, false) => [(4.0, Single), (6.0, Single), (4.0, Single), (6.0, Single)][k],
        (false, true) => (4.0, Double),
        (false, false) => (4.0, Single),
    })
}

/// Hidden units of the reference networks.
pub fn reference_hidden(variant: CellVariant, j3: f64) -> usize {
    match (j3 == 0.0, variant.architecture()) {
        (false, crate::cells::Architecture::Rnn) => 80,
        _ => 70,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majumdar_ghosh_reference_is_three_eighths() {
        assert_eq!(dmrg_energy(0.5, 0.0), Some(-3.0 * REFERENCE_SITES as f64 / 8.0));
        assert_eq!(dmrg_energy(0.2, 0.5), Some(-49.6287));
        assert_eq!(dmrg_energy(0.3, 0.0), None);
    }

    #[test]
    fn clamp_tables() {
        assert_eq!(reference_r_max(CellVariant::PoincareRnn, 0.8, 0.0), Some(0.7));
        assert_eq!(reference_r_max(CellVariant::PoincareGru, 0.2, 0.2), Some(0.82));
        assert_eq!(reference_r_max(CellVariant::LorentzRnn, 0.0, 0.0), None);
        assert_eq!(
            reference_l_max(CellVariant::LorentzRnn, 0.5, 0.0),
            Some((2.0, ClampMode::Single))
        );
        assert_eq!(
            reference_l_max(CellVariant::LorentzGru, 0.5, 0.2),
            Some((4.0, ClampMode::Single))
        );
        assert_eq!(reference_hidden(CellVariant::LorentzRnn, 0.5), 80);
        assert_eq!(reference_hidden(CellVariant::LorentzGru, 0.5), 70);
    }
}
