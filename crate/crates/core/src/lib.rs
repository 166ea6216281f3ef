//! Validity-frame driven selection among prediction models of different
//! fidelity.
//!
//! A model library is a graph of [`frames::ValidityFrame`]s. At design time
//! [`compiler::build_tree`] turns it into a decision tree; at run time the
//! [`runtime`] loop looks up the admissible frames for the observed context
//! and picks the cheapest one whose decisions agree with the original.

// `!(x > 0.0)` is deliberate: NaN has to fail range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compiler;
pub mod formats;
pub mod frames;
pub mod models;
pub mod reference;
pub mod runtime;
pub mod synth;
pub mod vfg;

pub use compiler::{build_tree, lookup, prune_for_deadline, CompileError, DecisionTree, HeatMap};
pub use formats::{Library, ParseError};
pub use frames::{Domain, FrameId, ModelId, PropertySet, Value, ValidityFrame};
pub use models::{ManeuverDecision, ManeuverKind, Scenario, Trajectory, VehicleState};
pub use runtime::{run_adaptive_simulation, run_simulation, KnowledgeBase, RunOptions, RuntimeError, StepRecord};
pub use vfg::{enumerate_admissible, Context, VfGraph};
