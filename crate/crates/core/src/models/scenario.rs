//! Vehicle and scenario types shared by every prediction model.

use std::fmt;
use std::str::FromStr;

use super::ModelError;

pub type VehicleId = String;

/// Turn indicator state. `Left` signals an intended move toward the lower
/// lane index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Blinker {
    #[default]
    Off,
    Left,
    Right,
}

impl fmt::Display for Blinker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Blinker::Off => "off",
            Blinker::Left => "left",
            Blinker::Right => "right",
        })
    }
}

impl FromStr for Blinker {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "off" => Ok(Blinker::Off),
            "left" => Ok(Blinker::Left),
            "right" => Ok(Blinker::Right),
            other => Err(format!("unknown blinker state `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: VehicleId,
    /// Longitudinal position (m).
    pub x: f64,
    /// Lane index; 0 is the leftmost lane.
    pub lane: usize,
    /// Longitudinal velocity (m/s), never negative.
    pub v: f64,
    /// Longitudinal acceleration (m/s²).
    pub a: f64,
    pub blinker: Blinker,
}

impl VehicleState {
    pub fn new(id: impl Into<VehicleId>, x: f64, lane: usize, v: f64, a: f64) -> Self {
        VehicleState {
            id: id.into(),
            x,
            lane,
            v,
            a,
            blinker: Blinker::Off,
        }
    }

    pub fn with_blinker(mut self, blinker: Blinker) -> Self {
        self.blinker = blinker;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Ego,
    /// Middle car, directly ahead of the ego.
    Mc,
    /// Front car, ahead of the middle car.
    Fc,
    Other,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Ego => "ego",
            Role::Mc => "mc",
            Role::Fc => "fc",
            Role::Other => "other",
        })
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ego" => Ok(Role::Ego),
            "mc" => Ok(Role::Mc),
            "fc" => Ok(Role::Fc),
            "other" => Ok(Role::Other),
            other => Err(format!("unknown vehicle role `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Participant {
    pub role: Role,
    pub state: VehicleState,
    /// Cruise speed the vehicle's planner aims for (m/s).
    pub desired_speed: f64,
}

impl Participant {
    /// Desired speed defaults to the initial speed.
    pub fn new(role: Role, state: VehicleState) -> Self {
        let desired_speed = state.v;
        Participant {
            role,
            state,
            desired_speed,
        }
    }
}

/// Scripted blinker change applied by the runtime when simulated time
/// reaches `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlinkEvent {
    pub t: f64,
    pub vehicle: VehicleId,
    pub state: Blinker,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Seconds of headway a follower keeps to its leader.
    pub time_gap: f64,
    pub deficit_weight: f64,
    pub change_weight: f64,
    /// Seconds after initiation during which a lane change occupies both lanes.
    pub occupancy_window: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            time_gap: 2.0,
            deficit_weight: 1.0,
            change_weight: 0.1,
            occupancy_window: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub lane_count: usize,
    pub lane_width: f64,
    pub vehicles: Vec<Participant>,
    /// Simulation and prediction timestep (s).
    pub dt: f64,
    /// Prediction horizon (s).
    pub horizon: f64,
    /// Per-step compute budget in abstract cost units.
    pub deadline: f64,
    /// Simulated seconds.
    pub duration: f64,
    pub planner: PlannerConfig,
    /// Steps between forced original/approximated comparisons.
    pub recheck_period: usize,
    /// Initiation-time tolerance for decision equality; `None` means `dt`.
    pub decision_tolerance: Option<f64>,
    pub blink_script: Vec<BlinkEvent>,
}

impl Scenario {
    pub fn new(vehicles: Vec<Participant>) -> Self {
        Scenario {
            lane_count: 3,
            lane_width: 3.5,
            vehicles,
            dt: 0.1,
            horizon: 8.0,
            deadline: 10.0,
            duration: 10.0,
            planner: PlannerConfig::default(),
            recheck_period: 10,
            decision_tolerance: None,
            blink_script: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |msg: String| Err(ModelError::InvalidScenario(msg));
        if self.lane_count == 0 {
            return invalid("lane_count must be positive".into());
        }
        if !(self.lane_width > 0.0) {
            return invalid("lane_width must be positive".into());
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return invalid(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return invalid(format!("horizon {} shorter than dt {}", self.horizon, self.dt));
        }
        if !(self.deadline > 0.0) {
            return invalid(format!("deadline must be positive, got {}", self.deadline));
        }
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return invalid(format!("duration must be non-negative, got {}", self.duration));
        }
        if self.recheck_period == 0 {
            return invalid("recheck period must be at least 1".into());
        }
        let egos = self.vehicles.iter().filter(|p| p.role == Role::Ego).count();
        if egos != 1 {
            return invalid(format!("expected exactly one ego vehicle, found {egos}"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &self.vehicles {
            let s = &p.state;
            if !seen.insert(s.id.as_str()) {
                return invalid(format!("duplicate vehicle id `{}`", s.id));
            }
            if s.lane >= self.lane_count {
                return invalid(format!("vehicle `{}` lane {} outside [0, {})", s.id, s.lane, self.lane_count));
            }
            if !(s.v >= 0.0) || !s.x.is_finite() || !s.a.is_finite() {
                return invalid(format!("vehicle `{}` has invalid kinematic state", s.id));
            }
            if !(p.desired_speed >= 0.0) {
                return invalid(format!("vehicle `{}` has negative desired speed", s.id));
            }
        }
        for ev in &self.blink_script {
            if !seen.contains(ev.vehicle.as_str()) {
                return invalid(format!("blink event references unknown vehicle `{}`", ev.vehicle));
            }
        }
        Ok(())
    }

    pub fn ego(&self) -> &Participant {
        self.vehicles
            .iter()
            .find(|p| p.role == Role::Ego)
            .expect("validated scenario has an ego")
    }

    pub fn ego_mut(&mut self) -> &mut Participant {
        self.vehicles
            .iter_mut()
            .find(|p| p.role == Role::Ego)
            .expect("validated scenario has an ego")
    }

    pub fn participant(&self, id: &str) -> Option<&Participant> {
        self.vehicles.iter().find(|p| p.state.id == id)
    }

    pub fn desired_speed(&self, id: &str) -> Option<f64> {
        self.participant(id).map(|p| p.desired_speed)
    }

    pub fn tolerance(&self) -> f64 {
        self.decision_tolerance.unwrap_or(self.dt)
    }

    /// Number of whole steps in `duration`.
    pub fn step_count(&self) -> usize {
        (self.duration / self.dt + 1e-9).floor() as usize
    }
}
