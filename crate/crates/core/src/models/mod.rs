//! Prediction models at three fidelity levels and the maneuver planner.
//!
//! * [`predict_original`]: constant-lane kinematics with acceleration.
//! * [`predict_approximated`]: the same without the acceleration term.
//! * [`predict_detailed`]: plans a maneuver for every vehicle, treating each
//!   one as the ego in turn.

mod kinematics;
mod planner;
mod scenario;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use kinematics::{predict_approximated, predict_original, sample_times};
pub use planner::{plan_maneuver, predict_detailed, predict_detailed_outcomes, safety_violations, PlanOutcome};
pub use scenario::{BlinkEvent, Blinker, Participant, PlannerConfig, Role, Scenario, VehicleId, VehicleState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub lane: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum ManeuverKind {
    KeepLane,
    ChangeLeft,
    ChangeRight,
}

impl fmt::Display for ManeuverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ManeuverKind::KeepLane => "KeepLane",
            ManeuverKind::ChangeLeft => "ChangeLeft",
            ManeuverKind::ChangeRight => "ChangeRight",
        })
    }
}

impl FromStr for ManeuverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "KeepLane" => Ok(ManeuverKind::KeepLane),
            "ChangeLeft" => Ok(ManeuverKind::ChangeLeft),
            "ChangeRight" => Ok(ManeuverKind::ChangeRight),
            other => Err(format!("unknown maneuver `{other}`")),
        }
    }
}

/// Discrete lane decision: whether, when and where to change lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManeuverDecision {
    pub kind: ManeuverKind,
    pub t_start: f64,
    pub target_lane: usize,
}

impl ManeuverDecision {
    pub fn keep(lane: usize) -> Self {
        ManeuverDecision {
            kind: ManeuverKind::KeepLane,
            t_start: 0.0,
            target_lane: lane,
        }
    }

    pub fn is_change(&self) -> bool {
        self.kind != ManeuverKind::KeepLane
    }

    /// Decision-level equality: same kind and target, initiation times
    /// within `tol` seconds.
    pub fn matches(&self, other: &ManeuverDecision, tol: f64) -> bool {
        self.kind == other.kind
            && self.target_lane == other.target_lane
            && (self.t_start - other.t_start).abs() <= tol + 1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub maneuvers: Vec<ManeuverDecision>,
}

impl Trajectory {
    pub fn initial_lane(&self) -> Option<usize> {
        self.samples.first().map(|s| s.lane)
    }

    /// Velocity at sample `k` by finite differences.
    pub fn velocity_at(&self, k: usize) -> f64 {
        let n = self.samples.len();
        if n < 2 {
            return 0.0;
        }
        let (i, j) = if k + 1 < n { (k, k + 1) } else { (n - 2, n - 1) };
        let (a, b) = (&self.samples[i], &self.samples[j]);
        (b.x - a.x) / (b.t - a.t)
    }

    pub fn last_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }
}

/// Which prediction pipeline a library model runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    Original,
    Approximated,
    Detailed,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Original => "original",
            ModelKind::Approximated => "approximated",
            ModelKind::Detailed => "detailed",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(ModelKind::Original),
            "approximated" => Ok(ModelKind::Approximated),
            "detailed" => Ok(ModelKind::Detailed),
            other => Err(format!("unknown model kind `{other}`")),
        }
    }
}

/// A library model entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Signalling vehicles are predicted to take their indicated change
    /// instead of holding their lane.
    pub blinker_intent: bool,
}
