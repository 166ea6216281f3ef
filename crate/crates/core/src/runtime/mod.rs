//! The closed adaptation loop: monitor the world, look up admissible
//! frames, pick one (comparing original and approximation when both are
//! admissible), apply its decision and advance the world.

mod pipeline;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::compiler::{
    build_tree, factor_cells, lookup, prune_for_deadline, Cell, CompileError, ContextCell, DecisionTree, HeatMap,
};
use crate::formats::{Library, TraceRow};
use crate::frames::{frame_admits, FrameId, PropertySet, Value};
use crate::models::{Blinker, ManeuverDecision, ModelError, ModelSpec, PlanOutcome, Role, Scenario, VehicleState};
use crate::vfg::{Context, GraphError, VfGraph};

pub use pipeline::run_pipeline;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuntimeError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("t={t}: no model fits the deadline of {deadline}: {reason}")]
    DeadlineInfeasible { t: f64, deadline: f64, reason: String },
    #[error("frame `{0}` has no model in the library")]
    UnknownModel(FrameId),
    #[error("unknown frame `{0}`")]
    UnknownFrame(FrameId),
    #[error("t={t}: every candidate model failed: {last}")]
    AllModelsFailed { t: f64, last: String },
}

/// Everything the loop shares across steps.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    pub graph: VfGraph,
    /// Compiled and pruned for `deadline`.
    pub tree: DecisionTree,
    pub models: BTreeMap<FrameId, ModelSpec>,
    pub heatmap: HeatMap,
    pub requested: PropertySet,
    pub deadline: f64,
    /// How `tree` was obtained.
    pub provenance: String,
    cells: BTreeMap<String, Vec<Cell>>,
    monitor_calls: u64,
}

impl KnowledgeBase {
    /// Compiles `library` with `ordering` (or the library's own) and prunes
    /// the tree for `deadline`.
    pub fn new(library: &Library, ordering: Option<Vec<String>>, deadline: f64) -> Result<Self, RuntimeError> {
        let graph = library.graph()?;
        let ordering = ordering.unwrap_or_else(|| library.factor_ordering(&graph));
        let tree = prune_for_deadline(&build_tree(&graph, &ordering, &library.requested)?, deadline);
        let mut models = BTreeMap::new();
        for f in graph.frames() {
            let spec = library.models.get(&f.binding.model).ok_or_else(|| RuntimeError::UnknownModel(f.id.clone()))?;
            models.insert(f.id.clone(), spec.clone());
        }
        Ok(KnowledgeBase {
            provenance: format!("order={} deadline={deadline}", ordering.join(",")),
            cells: factor_cells(&graph),
            graph,
            tree,
            models,
            heatmap: HeatMap::new(),
            requested: library.requested.clone(),
            deadline,
            monitor_calls: 0,
        })
    }

    pub fn monitor_calls(&self) -> u64 {
        self.monitor_calls
    }

    pub fn wcet(&self, id: &FrameId) -> f64 {
        self.graph.frame(id).map_or(f64::INFINITY, |f| f.wcet())
    }

    /// Heat-map cell of `context` over the graph's factors.
    pub fn discretize(&self, context: &Context) -> ContextCell {
        let mut cell = ContextCell::new();
        for (factor, cells) in &self.cells {
            let label = match context.get(factor) {
                None => "missing".to_string(),
                Some(v) => cells
                    .iter()
                    .find(|c| c.contains(v))
                    .map_or_else(|| v.to_string(), |c| c.to_string()),
            };
            cell = cell.with(factor.clone(), label);
        }
        cell
    }
}

/// Original/approximated decisions compared on a re-check step.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub original: FrameId,
    pub approximated: FrameId,
    pub original_decision: ManeuverDecision,
    pub approximated_decision: ManeuverDecision,
    pub tolerance: f64,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub context: Context,
    pub candidates: Vec<FrameId>,
    pub selected: FrameId,
    pub decision: ManeuverDecision,
    /// Ego state after the step.
    pub ego_state: VehicleState,
    /// Sum of the worst-case costs of every model run this step.
    pub step_cost: f64,
    pub switched: bool,
    pub comparison: Option<Comparison>,
    /// The selected model found no safe maneuver.
    pub emergency: bool,
}

impl StepRecord {
    pub fn blinking(&self) -> bool {
        matches!(self.context.get("blinking"), Some(Value::Bool(true)))
    }

    pub fn to_trace_row(&self) -> TraceRow {
        TraceRow {
            t: self.t,
            blinking: self.blinking(),
            selected_frame: self.selected.to_string(),
            decision_kind: self.decision.kind,
            target_lane: self.decision.target_lane,
            ego_x: self.ego_state.x,
            ego_lane: self.ego_state.lane,
            step_cost: self.step_cost,
            switched: self.switched,
        }
    }
}

/// Reads the influencing factors off the world and counts the context in
/// the heat map.
///
/// `blinking` is whether any non-ego vehicle signals; `front_gap` is the
/// distance to the nearest vehicle ahead in the ego's lane.
pub fn monitor(world: &Scenario, kb: &mut KnowledgeBase) -> Context {
    let ego = &world.ego().state;
    let others = world.vehicles.iter().filter(|p| p.role != Role::Ego);
    let blinking = others.clone().any(|p| p.state.blinker != Blinker::Off);
    let front_gap = others
        .filter(|p| p.state.lane == ego.lane && p.state.x >= ego.x)
        .map(|p| p.state.x - ego.x)
        .fold(f64::INFINITY, f64::min);
    let context = Context::new()
        .with("blinking", Value::Bool(blinking))
        .with("front_gap", Value::Real(front_gap));
    let cell = kb.discretize(&context);
    kb.heatmap.record(cell);
    kb.monitor_calls += 1;
    context
}

/// Admissible frames for `context`, cheapest first. Falls back to the head
/// frame when the tree has nothing that fits the deadline.
pub fn analyze(context: &Context, kb: &KnowledgeBase, t: f64) -> Result<Vec<FrameId>, RuntimeError> {
    match lookup(&kb.tree, context) {
        Ok(found) => Ok(found.candidates),
        Err(CompileError::NoFeasibleModel { .. }) => {
            let head = kb.graph.head();
            let admits = frame_admits(head, context).map_err(GraphError::from)?;
            if admits && !head.is_invalidated() && head.wcet() <= kb.deadline {
                Ok(vec![head.id.clone()])
            } else {
                Err(RuntimeError::DeadlineInfeasible {
                    t,
                    deadline: kb.deadline,
                    reason: format!("no admissible frame for `{context}` within budget"),
                })
            }
        }
        Err(e) => Err(e.into()),
    }
}

/// What the loop remembers between steps for re-check scheduling.
#[derive(Debug, Clone, Default)]
pub struct SelectionState {
    last_selected: Option<FrameId>,
    last_candidates: Vec<FrameId>,
    /// Only the graph's factors count as a context change.
    last_cell: Option<ContextCell>,
    steps_since_check: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub selected: FrameId,
    pub decision: ManeuverDecision,
    pub cost: f64,
    pub comparison: Option<Comparison>,
    pub emergency: bool,
    /// Ego position and speed one step along the chosen plan.
    pub next: Option<(f64, f64)>,
}

/// Picks the model for this step.
///
/// With an original/approximation pair among the candidates, both are run
/// on a re-check step and the approximation is kept only if it reaches the
/// same decision. Re-checks happen every `recheck_period` steps and
/// whenever the context or the candidate set changes; in between the last
/// choice is reused. Otherwise the cheapest candidate is used.
pub fn plan_select(
    candidates: &[FrameId],
    context: &Context,
    world: &Scenario,
    kb: &KnowledgeBase,
    state: &mut SelectionState,
    t: f64,
) -> Result<Selection, RuntimeError> {
    let model = |id: &FrameId| kb.models.get(id).ok_or_else(|| RuntimeError::UnknownModel(id.clone()));
    let pair = kb.tree.pair_in(candidates).cloned();
    let cell = kb.discretize(context);
    let recheck = state.last_selected.is_none()
        || state.steps_since_check + 1 >= world.recheck_period
        || state.last_candidates != candidates
        || state.last_cell.as_ref() != Some(&cell)
        || !state.last_selected.as_ref().is_some_and(|s| candidates.contains(s));

    let mut spent = 0.0;
    let mut result = None;
    if let Some((orig, approx)) = &pair {
        if recheck {
            spent += kb.wcet(orig) + kb.wcet(approx);
            let o = run_pipeline(model(orig)?, world);
            let a = run_pipeline(model(approx)?, world);
            match (o, a) {
                (Ok(o), Ok(a)) => {
                    let tolerance = world.tolerance();
                    let matched = o.decision.matches(&a.decision, tolerance);
                    let (selected, chosen) = if matched { (approx, &a) } else { (orig, &o) };
                    result = Some(Selection {
                        selected: selected.clone(),
                        decision: chosen.decision,
                        cost: 0.0,
                        comparison: Some(Comparison {
                            original: orig.clone(),
                            approximated: approx.clone(),
                            original_decision: o.decision,
                            approximated_decision: a.decision,
                            tolerance,
                            matched,
                        }),
                        emergency: chosen.emergency,
                        next: first_step(chosen),
                    });
                }
                (Ok(o), Err(_)) => {
                    result = Some(Selection {
                        selected: orig.clone(),
                        decision: o.decision,
                        cost: 0.0,
                        comparison: None,
                        emergency: o.emergency,
                        next: first_step(&o),
                    })
                }
                (Err(_), Ok(a)) => {
                    result = Some(Selection {
                        selected: approx.clone(),
                        decision: a.decision,
                        cost: 0.0,
                        comparison: None,
                        emergency: a.emergency,
                        next: first_step(&a),
                    })
                }
                (Err(_), Err(_)) => {}
            }
            if result.is_some() {
                state.steps_since_check = 0;
            }
        }
    }

    if result.is_none() {
        // Reuse the last choice while no re-check is due, else cheapest first.
        let mut order: Vec<&FrameId> = Vec::new();
        if pair.is_some() && !recheck {
            if let Some(last) = state.last_selected.as_ref() {
                order.push(last);
            }
            state.steps_since_check += 1;
        }
        let tried: BTreeSet<&FrameId> = if recheck { pair.iter().flat_map(|(o, a)| [o, a]).collect() } else { BTreeSet::new() };
        let rest: Vec<&FrameId> = candidates.iter().filter(|c| !order.contains(c) && !tried.contains(c)).collect();
        order.extend(rest);
        let mut last_err = String::from("no candidates");
        for id in order {
            spent += kb.wcet(id);
            match run_pipeline(model(id)?, world) {
                Ok(out) => {
                    result = Some(Selection {
                        selected: id.clone(),
                        decision: out.decision,
                        cost: 0.0,
                        comparison: None,
                        emergency: out.emergency,
                        next: first_step(&out),
                    });
                    break;
                }
                Err(e) => last_err = e.to_string(),
            }
        }
        if result.is_none() {
            return Err(RuntimeError::AllModelsFailed { t, last: last_err });
        }
    }

    let mut sel = result.expect("set above");
    sel.cost = spent;
    state.last_selected = Some(sel.selected.clone());
    state.last_candidates = candidates.to_vec();
    state.last_cell = Some(cell);
    Ok(sel)
}

/// Applies the ego's decision for one step and advances every other
/// vehicle kinematically.
///
/// A signalling vehicle moves one lane toward its indicated side once per
/// blink episode; `moved` remembers who already did.
pub fn execute(world: &mut Scenario, decision: &ManeuverDecision, planned: Option<(f64, f64)>, moved: &mut BTreeSet<String>) {
    let dt = world.dt;
    let lanes = world.lane_count;
    for p in &mut world.vehicles {
        let s = &mut p.state;
        if p.role == Role::Ego {
            let (x, v) = planned.unwrap_or((s.x + s.v * dt, s.v));
            s.x = x;
            s.v = v.max(0.0);
            if decision.is_change() && decision.t_start < dt - 1e-9 && decision.target_lane < lanes {
                s.lane = decision.target_lane;
            }
            continue;
        }
        s.x += s.v * dt + 0.5 * s.a * dt * dt;
        s.v = (s.v + s.a * dt).max(0.0);
        if s.blinker != Blinker::Off && !moved.contains(&s.id) {
            let target = match s.blinker {
                Blinker::Left => s.lane.checked_sub(1),
                _ => Some(s.lane + 1).filter(|l| *l < lanes),
            };
            if let Some(l) = target {
                s.lane = l;
            }
            moved.insert(s.id.clone());
        }
    }
}

/// Loop options beyond the scenario itself.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Skip lookup and selection; always run this frame.
    pub force_model: Option<FrameId>,
}

pub fn run_adaptive_simulation(scenario: &Scenario, kb: &mut KnowledgeBase) -> Result<Vec<StepRecord>, RuntimeError> {
    run_simulation(scenario, kb, &RunOptions::default())
}

/// Runs `duration / dt` monitor-analyze-plan-execute steps.
pub fn run_simulation(scenario: &Scenario, kb: &mut KnowledgeBase, options: &RunOptions) -> Result<Vec<StepRecord>, RuntimeError> {
    scenario.validate()?;
    if let Some(forced) = &options.force_model {
        if kb.graph.frame(forced).is_none() {
            return Err(RuntimeError::UnknownFrame(forced.clone()));
        }
    }
    let mut world = scenario.clone();
    let mut script: Vec<_> = scenario.blink_script.iter().enumerate().collect();
    script.sort_by(|a, b| a.1.t.total_cmp(&b.1.t).then(a.0.cmp(&b.0)));
    let mut script = script.into_iter().map(|(_, e)| e).peekable();
    let mut moved = BTreeSet::new();
    let mut state = SelectionState::default();
    let mut records = Vec::with_capacity(scenario.step_count());

    for k in 0..scenario.step_count() {
        // Rounded so that traces print 0.3 rather than 0.30000000000000004.
        let t = (k as f64 * scenario.dt * 1e9).round() / 1e9;
        while let Some(ev) = script.next_if(|e| e.t <= t + 1e-9) {
            if let Some(p) = world.vehicles.iter_mut().find(|p| p.state.id == ev.vehicle) {
                p.state.blinker = ev.state;
                moved.remove(&ev.vehicle);
            }
        }

        let context = monitor(&world, kb);
        let sel = match &options.force_model {
            Some(forced) => {
                let cost = kb.wcet(forced);
                let model = kb.models.get(forced).ok_or_else(|| RuntimeError::UnknownModel(forced.clone()))?;
                let out = run_pipeline(model, &world)?;
                Selection {
                    selected: forced.clone(),
                    decision: out.decision,
                    cost,
                    comparison: None,
                    emergency: out.emergency,
                        next: first_step(&out),
                }
            }
            None => {
                let candidates = analyze(&context, kb, t)?;
                plan_select(&candidates, &context, &world, kb, &mut state, t)?
            }
        };
        if sel.cost > scenario.deadline + 1e-9 {
            return Err(RuntimeError::DeadlineInfeasible {
                t,
                deadline: scenario.deadline,
                reason: format!("step would cost {}", sel.cost),
            });
        }
        let candidates = match &options.force_model {
            Some(f) => vec![f.clone()],
            None => state.last_candidates.clone(),
        };

        execute(&mut world, &sel.decision, sel.next, &mut moved);
        let switched = records.last().is_some_and(|r: &StepRecord| r.selected != sel.selected);
        records.push(StepRecord {
            t,
            context,
            candidates,
            selected: sel.selected,
            decision: sel.decision,
            ego_state: world.ego().state.clone(),
            step_cost: sel.cost,
            switched,
            comparison: sel.comparison,
            emergency: sel.emergency,
        });
    }
    Ok(records)
}

/// Ego position and speed after one step of the plan.
fn first_step(out: &PlanOutcome) -> Option<(f64, f64)> {
    let s = &out.trajectory.samples;
    let (a, b) = (s.first()?, s.get(1)?);
    Some((b.x, (b.x - a.x) / (b.t - a.t)))
}

/// Checks that every logged comparison selected the approximation exactly
/// when the two decisions matched within tolerance.
pub fn replay_comparisons(records: &[StepRecord]) -> Result<usize, String> {
    let mut checked = 0;
    for r in records {
        if let Some(c) = &r.comparison {
            let matched = c.original_decision.matches(&c.approximated_decision, c.tolerance);
            if matched != c.matched || (r.selected == c.approximated) != matched {
                return Err(format!("t={}: logged {:?}, selected {}", r.t, c, r.selected));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

pub fn total_cost(records: &[StepRecord]) -> f64 {
    records.iter().map(|r| r.step_cost).sum()
}

pub fn switch_count(records: &[StepRecord]) -> usize {
    records.iter().filter(|r| r.switched).count()
}
