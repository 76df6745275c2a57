//! Collision-free constant-velocity motion of planar point configurations.
//!
//! Particles start at a uniformly discrete set of positions and move forever
//! with fixed velocities. The crate builds velocity assignments on integer
//! lattice windows that keep every pair at distance at least one for all
//! times, verifies arbitrary configurations, lifts them to worldline cylinder
//! packings in space-time, and searches for counterexamples showing that no
//! bounded continuous field on the whole plane can play the same role.

pub mod evolution;
pub mod falsifier;
pub mod formats;
pub mod geometry;
pub mod lattice;
pub mod pairs;
pub mod spacetime;

pub use geometry::{Particle, Vec2, Vec3};
