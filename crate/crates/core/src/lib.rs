//! Numerical ergodic optimization for one-dimensional maps.
//!
//! The crate computes maximal ergodic averages `β(φ)` by two independent
//! routes (periodic orbit enumeration and maximum mean cycles on an Ulam
//! graph), estimates the Birkhoff-deviation constant `γ(φ)`, builds and
//! checks sub-action candidates, and constructs Markov covers for unimodal
//! maps.

pub mod dynamics;
pub mod markov;
pub mod observables;
pub mod optimize;
pub mod orbits;
pub mod potential;
pub mod real;
pub mod subaction;

pub use dynamics::{DynamicsError, Family, MapSpec, Space, Tolerances};
pub use observables::{Expr, LipMode, Observable, ObservableError};
pub use orbits::{dist_to_orbit, enumerate_periodic_orbits, orbit_average, OrbitError, PeriodicOrbit};
pub use potential::Potential;
pub use real::{Point, Real};
