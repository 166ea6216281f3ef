//! Ego prediction pipelines: predict the other vehicles with a model, then
//! plan the ego's maneuver against those predictions.

use std::collections::BTreeMap;

use crate::models::{
    plan_maneuver, predict_approximated, predict_detailed_outcomes, predict_original, Blinker, ModelError, ModelKind,
    ModelSpec, PlanOutcome, Role, Scenario, Trajectory, VehicleId,
};

/// Runs the ego pipeline of `model` on the current world.
pub fn run_pipeline(model: &ModelSpec, world: &Scenario) -> Result<PlanOutcome, ModelError> {
    let ego = &world.ego().state;
    if model.kind == ModelKind::Detailed {
        let mut all = predict_detailed_outcomes(world, world.horizon)?;
        return all
            .remove(&ego.id)
            .ok_or_else(|| ModelError::InvalidScenario("ego missing from detailed prediction".into()));
    }
    let predict = match model.kind {
        ModelKind::Original => predict_original,
        _ => predict_approximated,
    };
    let mut others: BTreeMap<VehicleId, Trajectory> = BTreeMap::new();
    for p in world.vehicles.iter().filter(|p| p.role != Role::Ego) {
        others.insert(p.state.id.clone(), predict(&p.state, world.horizon, world.dt)?);
    }
    if model.blinker_intent {
        let mut intents = BTreeMap::new();
        for p in world.vehicles.iter().filter(|p| p.role != Role::Ego && p.state.blinker != Blinker::Off) {
            let mut rest = others.clone();
            rest.remove(&p.state.id);
            let ego_pred = predict(ego, world.horizon, world.dt)?;
            rest.insert(ego.id.clone(), ego_pred);
            intents.insert(p.state.id.clone(), plan_maneuver(&p.state, &rest, world)?.trajectory);
        }
        others.extend(intents);
    }
    plan_maneuver(ego, &others, world)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ManeuverKind;
    use crate::reference;

    fn spec(kind: ModelKind, blinker_intent: bool) -> ModelSpec {
        ModelSpec { kind, blinker_intent }
    }

    #[test]
    fn nonblinking_world_every_model_overtakes() {
        let w = reference::scenario_nonblinking();
        for kind in [ModelKind::Original, ModelKind::Approximated, ModelKind::Detailed] {
            let out = run_pipeline(&spec(kind, false), &w).unwrap();
            assert_eq!(out.decision.kind, ManeuverKind::ChangeLeft, "{kind}");
        }
    }

    #[test]
    fn intent_models_keep_lane_when_mc_signals() {
        let mut w = reference::scenario_blinking();
        for p in &mut w.vehicles {
            if p.role == Role::Mc {
                p.state.blinker = Blinker::Left;
            }
        }
        for kind in [ModelKind::Original, ModelKind::Approximated, ModelKind::Detailed] {
            let out = run_pipeline(&spec(kind, true), &w).unwrap();
            assert_eq!(out.decision.kind, ManeuverKind::KeepLane, "{kind}");
        }
    }

    #[test]
    fn accelerating_mc_splits_original_and_approximation() {
        let w = reference::scenario_accel_mc();
        let o = run_pipeline(&spec(ModelKind::Original, false), &w).unwrap();
        let a = run_pipeline(&spec(ModelKind::Approximated, false), &w).unwrap();
        assert_eq!(o.decision.kind, ManeuverKind::KeepLane);
        assert_eq!(a.decision.kind, ManeuverKind::ChangeLeft);
    }
}
