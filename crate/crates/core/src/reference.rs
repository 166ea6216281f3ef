//! Shipped reference library, scenarios and contexts.

use crate::formats::{parse_contexts, parse_library, parse_scenario, Library};
use crate::models::Scenario;
use crate::vfg::Context;

pub const LIBRARY: &str = include_str!("../data/reference_library.vfl");
pub const SCENARIO_NONBLINKING: &str = include_str!("../data/highway_nonblinking.scn");
pub const SCENARIO_BLINKING: &str = include_str!("../data/highway_blinking.scn");
pub const SCENARIO_ZERO_ACCEL: &str = include_str!("../data/zero_accel.scn");
pub const SCENARIO_ACCEL_MC: &str = include_str!("../data/accel_mc.scn");
pub const CONTEXTS: &str = include_str!("../data/reference_contexts.ctx");

pub fn library() -> Library {
    parse_library(LIBRARY).expect("shipped library parses")
}

pub fn scenario_nonblinking() -> Scenario {
    parse_scenario(SCENARIO_NONBLINKING).expect("shipped scenario parses")
}

pub fn scenario_blinking() -> Scenario {
    parse_scenario(SCENARIO_BLINKING).expect("shipped scenario parses")
}

pub fn scenario_zero_accel() -> Scenario {
    parse_scenario(SCENARIO_ZERO_ACCEL).expect("shipped scenario parses")
}

pub fn scenario_accel_mc() -> Scenario {
    parse_scenario(SCENARIO_ACCEL_MC).expect("shipped scenario parses")
}

pub fn contexts() -> Vec<Context> {
    parse_contexts(CONTEXTS).expect("shipped contexts parse")
}
