use super::{ManeuverDecision, ModelError, Sample, Trajectory, VehicleState};

/// Sample instants `0, dt, 2dt, ...` up to and including `horizon`.
pub fn sample_times(horizon: f64, dt: f64) -> Result<Vec<f64>, ModelError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(ModelError::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !(horizon >= dt) || !horizon.is_finite() {
        return Err(ModelError::InvalidArgument(format!(
            "horizon must be at least dt ({dt}), got {horizon}"
        )));
    }
    let n = (horizon / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}

fn constant_lane(state: &VehicleState, horizon: f64, dt: f64, position: impl Fn(f64) -> f64) -> Result<Trajectory, ModelError> {
    let samples = sample_times(horizon, dt)?
        .into_iter()
        .map(|t| Sample {
            t,
            x: position(t),
            lane: state.lane,
        })
        .collect();
    Ok(Trajectory {
        samples,
        maneuvers: vec![ManeuverDecision::keep(state.lane)],
    })
}

/// `x(t) = ½·a·t² + v·t + x₀`, lane held constant.
pub fn predict_original(state: &VehicleState, horizon: f64, dt: f64) -> Result<Trajectory, ModelError> {
    let (x0, v, a) = (state.x, state.v, state.a);
    constant_lane(state, horizon, dt, |t| 0.5 * a * t * t + v * t + x0)
}

/// `x(t) = v·t + x₀`; the acceleration term is dropped.
pub fn predict_approximated(state: &VehicleState, horizon: f64, dt: f64) -> Result<Trajectory, ModelError> {
    let (x0, v) = (state.x, state.v);
    constant_lane(state, horizon, dt, |t| v * t + x0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(x: f64, v: f64, a: f64) -> VehicleState {
        VehicleState::new("car", x, 1, v, a)
    }

    fn x_at(traj: &Trajectory, t: f64) -> f64 {
        traj.samples.iter().find(|s| (s.t - t).abs() < 1e-9).unwrap().x
    }

    /// Explicit Euler with a tiny step, independent of the closed form.
    fn euler(x0: f64, v0: f64, a: f64, t_end: f64, h: f64) -> f64 {
        let (mut x, mut v, mut t) = (x0, v0, 0.0);
        while t < t_end - 1e-12 {
            let step = h.min(t_end - t);
            x += v * step + 0.5 * a * step * step;
            v += a * step;
            t += step;
        }
        x
    }

    #[test]
    fn original_examples() {
        let tr = predict_original(&state(0.0, 10.0, 0.0), 2.0, 0.5).unwrap();
        assert_eq!(x_at(&tr, 1.0), 10.0);
        let tr = predict_original(&state(0.0, 0.0, 0.0), 5.0, 1.0).unwrap();
        assert!(tr.samples.iter().all(|s| s.x == 0.0));
        let tr = predict_original(&state(1.0, 5.0, 2.0), 2.0, 0.5).unwrap();
        assert_eq!(x_at(&tr, 2.0), 15.0);
        assert!((euler(1.0, 5.0, 2.0, 2.0, 1e-4) - 15.0).abs() <= 1e-2);
        assert_eq!(tr.maneuvers, vec![ManeuverDecision::keep(1)]);
        assert!(tr.samples.iter().all(|s| s.lane == 1));
    }

    #[test]
    fn approximated_examples() {
        let tr = predict_approximated(&state(0.0, 10.0, 3.0), 1.0, 0.5).unwrap();
        assert_eq!(x_at(&tr, 1.0), 10.0);
        let tr = predict_approximated(&state(2.0, 7.0, 5.0), 3.0, 1.0).unwrap();
        assert_eq!(x_at(&tr, 3.0), 23.0);
        let tr = predict_original(&state(2.0, 7.0, 5.0), 3.0, 1.0).unwrap();
        assert_eq!(x_at(&tr, 3.0), 45.5);
    }

    #[test]
    fn sample_grid_starts_at_initial_state() {
        let tr = predict_original(&state(3.0, 4.0, 1.0), 1.0, 0.25).unwrap();
        let ts: Vec<f64> = tr.samples.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(tr.samples[0].x, 3.0);
    }

    #[test]
    fn rejects_bad_step_or_horizon() {
        let s = state(0.0, 1.0, 0.0);
        for (h, dt) in [(1.0, 0.0), (1.0, -0.1), (0.05, 0.1), (f64::NAN, 0.1), (1.0, f64::INFINITY)] {
            assert!(matches!(predict_original(&s, h, dt), Err(ModelError::InvalidArgument(_))));
            assert!(matches!(predict_approximated(&s, h, dt), Err(ModelError::InvalidArgument(_))));
        }
    }
}
