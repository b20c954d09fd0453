//! Passive environment-assisted quantum communication through a two-mode
//! beam splitter.
//!
//! The library builds assisted channels from configurable environment
//! states, computes entanglement fidelity and coherent information,
//! constructs Petz and fidelity-optimal decoders, runs the alternating
//! biconvex encoding–decoding optimization, and evaluates the closed-form
//! comb-state, GKP-lattice, and high-Fock schemes at desk scale.
//!
//! Module map:
//! - [`fock`] — truncated Fock-space linear algebra and state constructors
//! - [`channels`] — Kraus/Choi machinery and Gram-compressed channels
//! - [`metrics`] — entropies, fidelities, coherent information, capacity
//! - [`decoders`] — Petz, comb, high-Fock, and SDP-optimal decoders
//! - [`optimizer`] — ADMM solver and the alternating optimization
//! - [`comb`] — closed-form comb-scheme results and the finite-r bridge
//! - [`phase_space`] — characteristic functions, GKP lattices, hiding
//! - [`highfock`] — the {|0>,|2>} encoding with high-Fock environments
//! - [`verify`] — the built-in acceptance checks behind `peaqc verify`

pub mod channels;
pub mod comb;
pub mod decoders;
pub mod error;
pub mod fock;
pub mod highfock;
pub mod linalg;
pub mod metrics;
pub mod optimizer;
pub mod phase_space;
pub mod verify;

pub use error::{Error, Result};
