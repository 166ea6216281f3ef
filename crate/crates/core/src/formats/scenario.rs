//! Scenario file.
//!
//! ```text
//! lanes count=3 width=3.5
//! timing dt=0.1 horizon=8 duration=10
//! deadline 10
//! planner time_gap=2 w_deficit=1 w_change=0.1 window=1
//! runtime recheck=10 tol_t=0.1
//! vehicle ego role=ego x=0 lane=2 v=30 a=0 blinker=off desired=30
//! blink t=0 vehicle=mc state=left
//! ```

use std::fmt::Write as _;

use super::{content_lines, Args, ParseError};
use crate::models::{BlinkEvent, Blinker, Participant, Role, Scenario, VehicleState};

pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let mut sc = Scenario::new(Vec::new());
    for (n, line) in content_lines(text) {
        let mut toks = line.split_whitespace();
        let keyword = toks.next().unwrap_or_default();
        let err = |m: String| ParseError::new(n, m);
        match keyword {
            "lanes" => {
                let a = Args::parse(n, toks)?;
                a.only(&["count", "width"])?;
                sc.lane_count = a.opt("count")?.unwrap_or(sc.lane_count);
                sc.lane_width = a.opt("width")?.unwrap_or(sc.lane_width);
            }
            "timing" => {
                let a = Args::parse(n, toks)?;
                a.only(&["dt", "horizon", "duration"])?;
                sc.dt = a.opt("dt")?.unwrap_or(sc.dt);
                sc.horizon = a.opt("horizon")?.unwrap_or(sc.horizon);
                sc.duration = a.opt("duration")?.unwrap_or(sc.duration);
            }
            "deadline" => {
                let v = toks.next().ok_or_else(|| err("deadline needs a value".into()))?;
                sc.deadline = v.parse().map_err(|_| err(format!("bad deadline `{v}`")))?;
            }
            "planner" => {
                let a = Args::parse(n, toks)?;
                a.only(&["time_gap", "w_deficit", "w_change", "window"])?;
                let p = &mut sc.planner;
                p.time_gap = a.opt("time_gap")?.unwrap_or(p.time_gap);
                p.deficit_weight = a.opt("w_deficit")?.unwrap_or(p.deficit_weight);
                p.change_weight = a.opt("w_change")?.unwrap_or(p.change_weight);
                p.occupancy_window = a.opt("window")?.unwrap_or(p.occupancy_window);
            }
            "runtime" => {
                let a = Args::parse(n, toks)?;
                a.only(&["recheck", "tol_t"])?;
                sc.recheck_period = a.opt("recheck")?.unwrap_or(sc.recheck_period);
                sc.decision_tolerance = a.opt("tol_t")?.or(sc.decision_tolerance);
            }
            "vehicle" => {
                let id = toks.next().ok_or_else(|| err("vehicle needs an id".into()))?;
                let a = Args::parse(n, toks)?;
                a.only(&["role", "x", "lane", "v", "a", "blinker", "desired"])?;
                let state = VehicleState::new(id, a.req("x")?, a.req("lane")?, a.req("v")?, a.opt("a")?.unwrap_or(0.0))
                    .with_blinker(a.opt::<Blinker>("blinker")?.unwrap_or_default());
                let mut p = Participant::new(a.opt::<Role>("role")?.unwrap_or(Role::Other), state);
                if let Some(d) = a.opt("desired")? {
                    p.desired_speed = d;
                }
                sc.vehicles.push(p);
            }
            "blink" => {
                let a = Args::parse(n, toks)?;
                a.only(&["t", "vehicle", "state"])?;
                sc.blink_script.push(BlinkEvent {
                    t: a.req("t")?,
                    vehicle: a.req("vehicle")?,
                    state: a.req("state")?,
                });
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }
    let last = text.lines().count().max(1);
    sc.validate().map_err(|e| ParseError::new(last, e.to_string()))?;
    Ok(sc)
}

pub fn write_scenario(sc: &Scenario) -> String {
    let mut out = String::new();
    let p = &sc.planner;
    let _ = writeln!(out, "lanes count={} width={}", sc.lane_count, sc.lane_width);
    let _ = writeln!(out, "timing dt={} horizon={} duration={}", sc.dt, sc.horizon, sc.duration);
    let _ = writeln!(out, "deadline {}", sc.deadline);
    let _ = writeln!(
        out,
        "planner time_gap={} w_deficit={} w_change={} window={}",
        p.time_gap, p.deficit_weight, p.change_weight, p.occupancy_window
    );
    let _ = write!(out, "runtime recheck={}", sc.recheck_period);
    if let Some(tol) = sc.decision_tolerance {
        let _ = write!(out, " tol_t={tol}");
    }
    out.push('\n');
    for v in &sc.vehicles {
        let s = &v.state;
        let _ = writeln!(
            out,
            "vehicle {} role={} x={} lane={} v={} a={} blinker={} desired={}",
            s.id, v.role, s.x, s.lane, s.v, s.a, s.blinker, v.desired_speed
        );
    }
    for ev in &sc.blink_script {
        let _ = writeln!(out, "blink t={} vehicle={} state={}", ev.t, ev.vehicle, ev.state);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn shipped_scenarios_round_trip() {
        for sc in [reference::scenario_nonblinking(), reference::scenario_blinking(), reference::scenario_zero_accel()] {
            assert_eq!(parse_scenario(&write_scenario(&sc)).unwrap(), sc);
        }
    }

    #[test]
    fn reference_speeds_are_ordered() {
        let sc = reference::scenario_nonblinking();
        let speed = |r: Role| sc.vehicles.iter().find(|p| p.role == r).unwrap().state.v;
        assert!(speed(Role::Fc) < speed(Role::Mc) && speed(Role::Mc) < speed(Role::Ego));
    }

    #[test]
    fn errors() {
        assert_eq!(parse_scenario("vehicle e role=ego x=0 lane=0\n").unwrap_err().line, 1);
        assert_eq!(parse_scenario("vehicle e role=ego x=0 lane=0 v=1 colour=red\n").unwrap_err().line, 1);
        // Validation failures point at the end of the file.
        let err = parse_scenario("vehicle e role=mc x=0 lane=0 v=1\n\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("ego"));
        assert!(parse_scenario("vehicle e role=ego x=0 lane=0 v=1\nblink t=1 vehicle=ghost state=left\n").is_err());
        assert!(parse_scenario("vehicle e role=ego x=0 lane=0 v=1\ntiming dt=0\n").is_err());
    }
}
