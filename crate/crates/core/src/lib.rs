//! Multi-robot search for a moving intruder in orthogonal polygons.
//!
//! The crate covers polygon generation (random and comb-shaped), rectangular
//! decomposition, space-filling-curve patrols, cost-aware path planning, a
//! step-by-step pursuit simulator and a batch experiment harness.

pub mod decomposition;
pub mod geometry;
pub mod harness;
pub mod planning;
pub mod polygen;
pub mod sfc;
pub mod sim;

pub use decomposition::{Junction, Rectangle, Rectangulation};
pub use geometry::{Cell, GridGraph, OrthoPolygon, Point};
pub use planning::Scalar;
pub use sfc::Curve;
pub use sim::{Arena, IntruderModel, SimConfig, Strategy, TrialResult};

/// Visit-count cost map with floating-point costs.
pub type CostMap = planning::CostMap<f64>;
/// Visit-count cost map with exact rational costs.
pub type ExactCostMap = planning::CostMap<num_rational::Rational64>;
pub type Assignment = planning::Assignment<f64>;
pub type ExactAssignment = planning::Assignment<num_rational::Rational64>;
