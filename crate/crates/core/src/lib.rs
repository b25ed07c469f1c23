//! Isomonodromic deformations of Fuchsian systems with values in sl(2,C):
//! the Schlesinger system on products of coadjoint orbits, its reduction by
//! simultaneous conjugation, and the resulting polynomial Hamiltonian system
//! on products of two-dimensional quadrics.

pub mod basis;
pub mod dual;
pub mod error;
pub mod flow;
pub mod orbit;
pub mod reduction;
pub mod sampling;
pub mod sl2;

pub use basis::{chart_select, ChartSpec, StandardBasis};
pub use error::{Error, Result};
pub use orbit::{ChartCoords, ChartId, OrbitPoint, OrbitTangent};
pub use reduction::{hamiltonian_value, invariants, lift, reduce, Configuration, InvariantTable, ReducedPoint};
pub use sl2::{bracket, killing, GroupElement, Sl2Element};
