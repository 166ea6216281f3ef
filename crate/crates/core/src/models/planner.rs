//! Candidate-set maneuver planner and the detailed every-car-as-ego model.
//!
//! Lane changes are instantaneous lane-index switches at the initiation
//! time. For `occupancy_window` seconds afterwards the vehicle is checked
//! against both its old and its new lane. Longitudinal motion follows the
//! nearest leader in the occupied lanes so that the headway rule
//! `gap ≥ time_gap · v_follower` holds whenever it can.
//!
//! Gap rule enforced on candidates:
//! * against every vehicle ahead in an occupied lane, at every sample;
//! * against vehicles behind only in the lane being entered, while the
//!   occupancy window is open. Vehicles already behind in a lane the
//!   planner keeps are responsible for their own headway.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::kinematics::{predict_original, sample_times};
use super::{Blinker, ManeuverDecision, ManeuverKind, ModelError, Sample, Scenario, Trajectory, VehicleId, VehicleState};

const EPS: f64 = 1e-6;
const COST_TIE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub decision: ManeuverDecision,
    pub trajectory: Trajectory,
    pub cost: f64,
    /// Every candidate violated the gap rule; the keep-lane plan is returned
    /// regardless.
    pub emergency: bool,
}

struct Candidate {
    decision: ManeuverDecision,
    /// (target lane, first sample index in the target lane)
    change: Option<(usize, usize)>,
}

struct Evaluated {
    decision: ManeuverDecision,
    trajectory: Trajectory,
    cost: f64,
    feasible: bool,
}

struct Setup<'a> {
    ego: &'a VehicleState,
    desired: f64,
    times: Vec<f64>,
    others: Vec<(&'a VehicleId, &'a Trajectory)>,
    time_gap: f64,
    window: f64,
    deficit_weight: f64,
    change_weight: f64,
}

impl Setup<'_> {
    fn dt(&self) -> f64 {
        self.times.get(1).copied().unwrap_or(0.0) - self.times[0]
    }

    fn in_window(&self, c: &Candidate, k: usize) -> bool {
        match c.change {
            Some((_, ks)) => {
                let (t, ts) = (self.times[k], self.times[ks]);
                t >= ts - 1e-9 && t <= ts + self.window + 1e-9
            }
            None => false,
        }
    }

    fn lane_at(&self, c: &Candidate, k: usize) -> usize {
        match c.change {
            Some((target, ks)) if k >= ks => target,
            _ => self.ego.lane,
        }
    }

    fn occupied(&self, c: &Candidate, k: usize) -> Vec<usize> {
        match c.change {
            Some((target, _)) if self.in_window(c, k) => vec![self.ego.lane, target],
            _ => vec![self.lane_at(c, k)],
        }
    }

    fn evaluate(&self, c: Candidate) -> Evaluated {
        let n = self.times.len() - 1;
        let dt = self.dt();
        let mut xs = Vec::with_capacity(n + 1);
        let mut vs = Vec::with_capacity(n + 1);
        xs.push(self.ego.x);
        vs.push(self.ego.v);
        for k in 0..n {
            let lanes = self.occupied(&c, k + 1);
            let mut v = self.desired;
            for (_, tr) in &self.others {
                let (now, next) = (&tr.samples[k], &tr.samples[k + 1]);
                if lanes.contains(&next.lane) && now.x >= xs[k] {
                    v = v.min((next.x - xs[k]) / (dt + self.time_gap));
                }
            }
            let v = v.max(0.0);
            vs.push(v);
            xs.push(xs[k] + v * dt);
        }

        let feasible = (0..=n).all(|k| {
            let lanes = self.occupied(&c, k);
            let entering = match c.change {
                Some((target, _)) if self.in_window(&c, k) => Some(target),
                _ => None,
            };
            self.others.iter().all(|(_, tr)| {
                let s = &tr.samples[k];
                if !lanes.contains(&s.lane) {
                    return true;
                }
                if s.x >= xs[k] {
                    s.x - xs[k] >= self.time_gap * vs[k] - EPS
                } else if entering == Some(s.lane) {
                    xs[k] - s.x >= self.time_gap * tr.velocity_at(k).max(0.0) - EPS
                } else {
                    true
                }
            })
        });

        let deficit: f64 = vs[1..].iter().map(|v| (self.desired - v).max(0.0) * dt).sum();
        let cost = self.deficit_weight * deficit + if c.decision.is_change() { self.change_weight } else { 0.0 };
        let samples = (0..=n)
            .map(|k| Sample {
                t: self.times[k],
                x: xs[k],
                lane: self.lane_at(&c, k),
            })
            .collect();
        Evaluated {
            decision: c.decision,
            trajectory: Trajectory {
                samples,
                maneuvers: vec![c.decision],
            },
            cost,
            feasible,
        }
    }
}

/// Total order used to pick among feasible candidates: cost, then keep-lane
/// first, then earlier initiation, then lower target lane.
fn preference(a: &Evaluated, b: &Evaluated) -> Ordering {
    if (a.cost - b.cost).abs() > COST_TIE {
        return a.cost.partial_cmp(&b.cost).unwrap_or(Ordering::Equal);
    }
    let key = |e: &Evaluated| (e.decision.is_change(), e.decision.t_start, e.decision.target_lane);
    let (ka, kb) = (key(a), key(b));
    ka.0.cmp(&kb.0)
        .then(ka.1.partial_cmp(&kb.1).unwrap_or(Ordering::Equal))
        .then(ka.2.cmp(&kb.2))
}

fn candidates(ego: &VehicleState, scenario: &Scenario, times: &[f64]) -> Vec<Candidate> {
    let horizon = scenario.horizon;
    let mut out = vec![Candidate {
        decision: ManeuverDecision::keep(ego.lane),
        change: None,
    }];
    let targets = [
        (ManeuverKind::ChangeLeft, ego.lane.checked_sub(1)),
        (ManeuverKind::ChangeRight, Some(ego.lane + 1).filter(|l| *l < scenario.lane_count)),
    ];
    for (kind, target) in targets {
        let Some(target) = target else { continue };
        let mut last_ks = None;
        for frac in [0.0, 0.25, 0.5, 0.75] {
            let nominal = frac * horizon;
            let Some(ks) = times.iter().position(|t| *t >= nominal - 1e-9) else { continue };
            if last_ks == Some(ks) {
                continue;
            }
            last_ks = Some(ks);
            out.push(Candidate {
                decision: ManeuverDecision {
                    kind,
                    t_start: times[ks],
                    target_lane: target,
                },
                change: Some((target, ks)),
            });
        }
    }
    out
}

/// Chooses a lane decision for `ego` given predicted trajectories of the
/// other vehicles. A vehicle with an active blinker takes the earliest
/// feasible change toward the indicated side before anything else is
/// considered.
pub fn plan_maneuver(
    ego: &VehicleState,
    others: &BTreeMap<VehicleId, Trajectory>,
    scenario: &Scenario,
) -> Result<PlanOutcome, ModelError> {
    let times = sample_times(scenario.horizon, scenario.dt)?;
    if ego.lane >= scenario.lane_count {
        return Err(ModelError::InvalidArgument(format!(
            "vehicle `{}` in lane {} of a {}-lane road",
            ego.id, ego.lane, scenario.lane_count
        )));
    }
    let n = times.len() - 1;
    let mut covered = Vec::with_capacity(others.len());
    for (id, tr) in others {
        if *id == ego.id {
            continue;
        }
        let aligned = tr.samples.len() > n
            && tr.samples[..=n]
                .iter()
                .zip(&times)
                .all(|(s, t)| (s.t - t).abs() <= 1e-6);
        if !aligned {
            return Err(ModelError::InvalidArgument(format!(
                "trajectory of `{id}` does not cover the planning grid up to {}",
                scenario.horizon
            )));
        }
        covered.push((id, tr));
    }

    let setup = Setup {
        ego,
        desired: scenario.desired_speed(&ego.id).unwrap_or(ego.v),
        times: times.clone(),
        others: covered,
        time_gap: scenario.planner.time_gap,
        window: scenario.planner.occupancy_window,
        deficit_weight: scenario.planner.deficit_weight,
        change_weight: scenario.planner.change_weight,
    };
    let evaluated: Vec<Evaluated> = candidates(ego, scenario, &times)
        .into_iter()
        .map(|c| setup.evaluate(c))
        .collect();

    let intent = match ego.blinker {
        Blinker::Off => None,
        Blinker::Left => Some(ManeuverKind::ChangeLeft),
        Blinker::Right => Some(ManeuverKind::ChangeRight),
    };
    let signalled = intent.and_then(|kind| evaluated.iter().find(|e| e.feasible && e.decision.kind == kind));
    let best = signalled.or_else(|| {
        evaluated
            .iter()
            .filter(|e| e.feasible)
            .min_by(|a, b| preference(a, b))
    });

    let (chosen, emergency) = match best {
        Some(e) => (e, false),
        None => (&evaluated[0], true),
    };
    Ok(PlanOutcome {
        decision: chosen.decision,
        trajectory: chosen.trajectory.clone(),
        cost: chosen.cost,
        emergency,
    })
}

/// Plans every vehicle as if it were the ego.
///
/// Non-signalling vehicles are first predicted on their lane with the
/// original kinematics; a signalling vehicle is predicted to take its
/// indicated change at the earliest feasible initiation time. Each
/// non-signalling vehicle then plans against those predictions.
pub fn predict_detailed_outcomes(scenario: &Scenario, horizon: f64) -> Result<BTreeMap<VehicleId, PlanOutcome>, ModelError> {
    scenario.validate()?;
    let mut sc = scenario.clone();
    sc.horizon = horizon;

    let mut base = BTreeMap::new();
    for p in &sc.vehicles {
        base.insert(p.state.id.clone(), predict_original(&p.state, horizon, sc.dt)?);
    }
    let without = |map: &BTreeMap<VehicleId, Trajectory>, id: &str| {
        let mut m = map.clone();
        m.remove(id);
        m
    };

    let mut intents = BTreeMap::new();
    for p in sc.vehicles.iter().filter(|p| p.state.blinker != Blinker::Off) {
        let outcome = plan_maneuver(&p.state, &without(&base, &p.state.id), &sc)?;
        intents.insert(p.state.id.clone(), outcome);
    }
    let mut predicted = base;
    for (id, outcome) in &intents {
        predicted.insert(id.clone(), outcome.trajectory.clone());
    }

    let mut out = BTreeMap::new();
    for p in &sc.vehicles {
        let id = &p.state.id;
        let outcome = match intents.get(id) {
            Some(o) => o.clone(),
            None => plan_maneuver(&p.state, &without(&predicted, id), &sc)?,
        };
        out.insert(id.clone(), outcome);
    }
    Ok(out)
}

pub fn predict_detailed(scenario: &Scenario, horizon: f64) -> Result<BTreeMap<VehicleId, Trajectory>, ModelError> {
    Ok(predict_detailed_outcomes(scenario, horizon)?
        .into_iter()
        .map(|(id, o)| (id, o.trajectory))
        .collect())
}

/// Sample indices at which `traj` breaks the gap rule against `others`.
///
/// `initial_speed` is the planner's speed at sample 0; later speeds are
/// recovered from the positions.
pub fn safety_violations(
    traj: &Trajectory,
    initial_speed: f64,
    others: &BTreeMap<VehicleId, Trajectory>,
    scenario: &Scenario,
) -> Vec<(usize, VehicleId)> {
    let cfg = &scenario.planner;
    let Some(decision) = traj.maneuvers.first() else { return Vec::new() };
    let Some(origin) = traj.initial_lane() else { return Vec::new() };
    let mut out = Vec::new();
    for (k, s) in traj.samples.iter().enumerate() {
        let v = if k == 0 {
            initial_speed
        } else {
            (s.x - traj.samples[k - 1].x) / (s.t - traj.samples[k - 1].t)
        };
        let window = decision.is_change() && s.t >= decision.t_start - 1e-9 && s.t <= decision.t_start + cfg.occupancy_window + 1e-9;
        let lanes: Vec<usize> = if window { vec![origin, decision.target_lane] } else { vec![s.lane] };
        for (id, tr) in others {
            let Some(o) = tr.samples.get(k) else { continue };
            if !lanes.contains(&o.lane) {
                continue;
            }
            let ok = if o.x >= s.x {
                o.x - s.x >= cfg.time_gap * v - EPS
            } else if window && o.lane == decision.target_lane {
                s.x - o.x >= cfg.time_gap * tr.velocity_at(k).max(0.0) - EPS
            } else {
                true
            };
            if !ok {
                out.push((k, id.clone()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Participant, Role};

    fn overtaking(mc_blinker: Blinker) -> Scenario {
        Scenario::new(vec![
            Participant::new(Role::Ego, VehicleState::new("ego", 0.0, 2, 30.0, 0.0)),
            Participant::new(Role::Mc, VehicleState::new("mc", 70.0, 2, 25.0, 0.0).with_blinker(mc_blinker)),
            Participant::new(Role::Fc, VehicleState::new("fc", 200.0, 2, 20.0, 0.0)),
        ])
    }

    fn constant_lane_others(sc: &Scenario, skip: &str) -> BTreeMap<VehicleId, Trajectory> {
        sc.vehicles
            .iter()
            .filter(|p| p.state.id != skip)
            .map(|p| (p.state.id.clone(), predict_original(&p.state, sc.horizon, sc.dt).unwrap()))
            .collect()
    }

    #[test]
    fn alone_at_desired_speed_keeps_lane() {
        let sc = Scenario::new(vec![Participant::new(Role::Ego, VehicleState::new("ego", 0.0, 1, 30.0, 0.0))]);
        let out = plan_maneuver(&sc.ego().state, &BTreeMap::new(), &sc).unwrap();
        assert_eq!(out.decision, ManeuverDecision::keep(1));
        assert!(!out.emergency);
        assert_eq!(out.cost, 0.0);
    }

    #[test]
    fn overtakes_slower_middle_car() {
        let sc = overtaking(Blinker::Off);
        let out = plan_maneuver(&sc.ego().state, &constant_lane_others(&sc, "ego"), &sc).unwrap();
        assert_eq!(out.decision.kind, ManeuverKind::ChangeLeft);
        assert_eq!(out.decision.target_lane, 1);
        assert_eq!(out.decision.t_start, 0.0);
    }

    #[test]
    fn keeps_lane_when_middle_car_signals() {
        let sc = overtaking(Blinker::Left);
        let detailed = predict_detailed_outcomes(&sc, sc.horizon).unwrap();
        assert_eq!(detailed["mc"].decision.kind, ManeuverKind::ChangeLeft);
        assert_eq!(detailed["ego"].decision.kind, ManeuverKind::KeepLane);
        assert!(!detailed["ego"].emergency);
    }

    #[test]
    fn no_room_is_an_emergency_keep() {
        let mut sc = Scenario::new(vec![
            Participant::new(Role::Ego, VehicleState::new("ego", 0.0, 0, 30.0, 0.0)),
            Participant::new(Role::Mc, VehicleState::new("mc", 5.0, 0, 30.0, 0.0)),
        ]);
        sc.lane_count = 1;
        let out = plan_maneuver(&sc.ego().state, &constant_lane_others(&sc, "ego"), &sc).unwrap();
        assert!(out.emergency);
        assert_eq!(out.decision, ManeuverDecision::keep(0));
    }

    #[test]
    fn short_trajectories_are_rejected() {
        let sc = overtaking(Blinker::Off);
        let mut others = constant_lane_others(&sc, "ego");
        others.get_mut("mc").unwrap().samples.truncate(10);
        assert!(matches!(plan_maneuver(&sc.ego().state, &others, &sc), Err(ModelError::InvalidArgument(_))));
    }

    #[test]
    fn single_vehicle_detailed_is_keep_lane() {
        let sc = Scenario::new(vec![Participant::new(Role::Ego, VehicleState::new("ego", 0.0, 1, 30.0, 0.0))]);
        let out = predict_detailed(&sc, sc.horizon).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out["ego"].maneuvers, vec![ManeuverDecision::keep(1)]);
    }

    #[test]
    fn detailed_without_blinkers_composes_per_car_plans() {
        let sc = overtaking(Blinker::Off);
        let detailed = predict_detailed(&sc, sc.horizon).unwrap();
        for p in &sc.vehicles {
            let own = plan_maneuver(&p.state, &constant_lane_others(&sc, &p.state.id), &sc).unwrap();
            assert_eq!(detailed[&p.state.id], own.trajectory, "vehicle {}", p.state.id);
        }
    }

    #[test]
    fn chosen_plan_respects_gap_rule() {
        for blink in [Blinker::Off, Blinker::Left] {
            let sc = overtaking(blink);
            let others = constant_lane_others(&sc, "ego");
            let out = plan_maneuver(&sc.ego().state, &others, &sc).unwrap();
            assert!(safety_violations(&out.trajectory, 30.0, &others, &sc).is_empty());
        }
    }
}
