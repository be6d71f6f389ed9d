//! Compile an IFC building model and a longitudinal occupant dataset into a
//! BRICK knowledge graph serialized as Turtle.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! 1. [`step`] reads the ISO 10303-21 text into an entity table.
//! 2. [`ifc`] interprets the IFC subset into a typed [`ifc::BuildingModel`].
//! 3. [`occupants`] loads and validates the occupant CSV; [`geo`] projects
//!    WGS84 samples into building-local coordinates.
//! 4. [`inference`] derives containment, zone feeding and control relations.
//! 5. [`brick`] builds the graph for the requested mode, serializes it and
//!    diffs two graphs by source identifier.
//!
//! [`pipeline`] wires the stages together for the command-line tool.

pub mod brick;
pub mod diagnostics;
pub mod geo;
pub mod geometry;
pub mod ifc;
pub mod inference;
pub mod occupants;
pub mod pipeline;
pub mod step;

pub use diagnostics::{Diagnostic, Severity};
