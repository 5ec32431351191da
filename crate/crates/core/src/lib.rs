//! Escape lengths of planar flows.
//!
//! A flow curve of an incompressible field `v` with `c1 < ‖v‖ < c2` can
//! need length of order `c2/c1` to leave the unit disk around its start, and
//! so can the flow of the quarter-turned field `v⊥`. Flowing first along
//! `v⊥` to a short level set of the stream function and then along `v`
//! always escapes within `√(4π c2/c1)`. This crate integrates the flows,
//! builds the stream function on a grid, measures its level sets and
//! checks the escape bounds numerically.

pub mod builtins;
pub mod error;
pub mod expr;
pub mod field;
pub mod flow;
pub mod geometry;
pub mod planner;
pub mod report;
pub mod stream;
pub mod svg;
pub mod verify;
pub mod zigzag;

pub use error::{Error, Result};
pub use field::{perpendicular, FieldBounds, PlanarField};
pub use geometry::{Disk, Point2, Vec2};
