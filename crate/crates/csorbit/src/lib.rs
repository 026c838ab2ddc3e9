//! Coherent states of the oscillator, spin and SU(1,1) systems: orbit
//! superpositions of coherent states, Pancharatnam and geometric phases, and
//! Husimi Q fields.

pub mod cs;
pub mod error;
pub mod experiments;
pub mod numeric;
pub mod oracle;
pub mod orbit;
pub mod phase;
pub mod qscope;

pub use cs::{
    check_generator, cs_coefficients, cs_projection, expectation_generator, generator_matrix,
    group_action, overlap_cs, position_overlap_h4, Axis, CsSystem, DiskPoint, Generator, Manifold,
    PhasePoint, SpherePoint, StateVector, SystemKind,
};
pub use error::{Error, Result};
pub use numeric::C64;
