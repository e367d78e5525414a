//! Polynomial navigation functions for 3-D spherical workspaces.
//!
//! The crate builds implicit encodings for spheres, full and capped
//! cylinders and their smooth unions, composes them into navigation
//! potentials, and provides critical-point analysis, the spherical-robot
//! transformation and a damped trajectory integrator. It needs only `alloc`.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
// Negated comparisons deliberately send NaN down the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod field;
pub mod geometry;
pub mod math;
pub mod merge;
pub mod sampling;
pub mod scene;
pub mod simulate;
pub mod transform;
pub mod validate;

pub use analysis::{CriticalClass, CriticalPointReport};
pub use error::{AnalysisError, FieldError, GeometryError, MergeError, SimError, TransformError};
pub use field::{FieldEval, NavSpec, Potential};
pub use geometry::{CappedCylinder, FullCylinder, Implicit, Jet, Obstacle, Sphere};
pub use math::{Mat3, Vec3};
pub use merge::MergedObstacle;
pub use scene::{Body, JointDecl, Workspace};
pub use simulate::{simulate, simulate_batch, BatchSummary, Integrator, Outcome, SimConfig, Trajectory};
pub use transform::{transform, BallJoint, ExpansionMode, TransformResult};
pub use validate::{validate, PairClass, ValidationReport};
