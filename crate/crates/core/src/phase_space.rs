//! Characteristic-function analysis: translation operators, grid evaluation,
//! the beam-splitter product rule, GKP lattices, and the hiding diagnostic.

use crate::fock::LatticeKind;

/// Stabilizer displacement vectors (u, v) of the qubit GKP lattice, in
/// (x, p) phase-space coordinates. Both satisfy |u × v| = 4π.
pub fn lattice_vectors(kind: LatticeKind) -> ([f64; 2], [f64; 2]) {
    use std::f64::consts::PI;
    match kind {
        LatticeKind::Square => ([0.0, 2.0 * PI.sqrt()], [2.0 * PI.sqrt(), 0.0]),
        LatticeKind::Hexagonal => {
            let s = (2.0 * PI / 3.0_f64.sqrt()).sqrt();
            ([-s, (2.0 * PI * 3.0_f64.sqrt()).sqrt()], [2.0 * s, 0.0])
        }
    }
}
