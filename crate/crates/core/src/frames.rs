//! Validity frames: what a model answers for, under which influencing
//! factors, at what execution cost, and how its validity is tracked.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::models::Trajectory;
use crate::vfg::Context;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Bool(bool),
    Real(f64),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Real(x) => write!(f, "{x}"),
        }
    }
}

impl FromStr for Value {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => s
                .parse::<f64>()
                .map(Value::Real)
                .map_err(|_| format!("`{s}` is neither a boolean nor a number")),
        }
    }
}

/// Either a finite set of booleans or a closed real interval. Mixed domains
/// do not exist.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Flags(BTreeSet<bool>),
    Interval { lo: f64, hi: f64 },
}

impl Domain {
    pub fn flags(values: impl IntoIterator<Item = bool>) -> Self {
        Domain::Flags(values.into_iter().collect())
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self, FrameError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(FrameError::EmptyDomain(format!("[{lo},{hi}]")));
        }
        Ok(Domain::Interval { lo, hi })
    }

    pub fn is_interval(&self) -> bool {
        matches!(self, Domain::Interval { .. })
    }

    /// `None` when the value kind does not match the domain kind.
    pub fn contains(&self, value: &Value) -> Option<bool> {
        match (self, value) {
            (Domain::Flags(set), Value::Bool(b)) => Some(set.contains(b)),
            (Domain::Interval { lo, hi }, Value::Real(x)) => Some(*lo <= *x && *x <= *hi),
            _ => None,
        }
    }

    pub fn is_subset_of(&self, other: &Domain) -> bool {
        match (self, other) {
            (Domain::Flags(a), Domain::Flags(b)) => a.is_subset(b),
            (Domain::Interval { lo: a, hi: b }, Domain::Interval { lo: c, hi: d }) => c <= a && b <= d,
            _ => false,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Flags(set) => {
                let items: Vec<String> = set.iter().map(|b| b.to_string()).collect();
                write!(f, "{{{}}}", items.join(","))
            }
            Domain::Interval { lo, hi } => write!(f, "[{lo},{hi}]"),
        }
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(inner) = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            let mut set = BTreeSet::new();
            for item in inner.split(',').map(str::trim).filter(|i| !i.is_empty()) {
                match item {
                    "true" => set.insert(true),
                    "false" => set.insert(false),
                    other => return Err(format!("enumerated domains hold booleans, got `{other}`")),
                };
            }
            return Ok(Domain::Flags(set));
        }
        if let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let (lo, hi) = inner
                .split_once(',')
                .ok_or_else(|| format!("interval `{s}` needs two endpoints"))?;
            let parse = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("bad interval endpoint `{x}`"));
            return Domain::interval(parse(lo)?, parse(hi)?).map_err(|e| e.to_string());
        }
        Err(format!("`{s}` is neither an interval `[lo,hi]` nor a set `{{..}}`"))
    }
}

/// Named domains; used for both modeled properties and influencing factors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DomainSet {
    entries: BTreeMap<String, Domain>,
}

pub type PropertySet = DomainSet;
pub type FactorSet = DomainSet;

impl DomainSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, domain: Domain) -> Result<(), FrameError> {
        let name = name.into();
        if let Domain::Interval { lo, hi } = domain {
            if lo > hi {
                return Err(FrameError::EmptyDomain(name));
            }
        }
        if self.entries.contains_key(&name) {
            return Err(FrameError::DuplicateName(name));
        }
        self.entries.insert(name, domain);
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, domain: Domain) -> Self {
        self.insert(name, domain).expect("unique entry");
        self
    }

    pub fn get(&self, name: &str) -> Option<&Domain> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Domain)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names_subset_of(&self, other: &DomainSet) -> bool {
        self.names().all(|n| other.contains(n))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrameId(pub String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ModelId(pub String);

macro_rules! string_id {
    ($t:ty) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
        impl From<&str> for $t {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }
        impl $t {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }
    };
}
string_id!(FrameId);
string_id!(ModelId);

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionSpec {
    pub platform: String,
    /// Worst-case cost per invocation, abstract units.
    pub wcet: f64,
    pub mean_cost: f64,
}

impl ExecutionSpec {
    pub fn new(platform: impl Into<String>, wcet: f64, mean_cost: f64) -> Result<Self, FrameError> {
        if !(mean_cost > 0.0 && mean_cost <= wcet && wcet.is_finite()) {
            return Err(FrameError::BadCost { wcet, mean_cost });
        }
        Ok(ExecutionSpec {
            platform: platform.into(),
            wcet,
            mean_cost,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidityStatus {
    #[default]
    AssumedValid,
    Validated,
    Invalidated,
}

impl fmt::Display for ValidityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValidityStatus::AssumedValid => "assumed",
            ValidityStatus::Validated => "validated",
            ValidityStatus::Invalidated => "invalidated",
        })
    }
}

impl FromStr for ValidityStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "assumed" => Ok(ValidityStatus::AssumedValid),
            "validated" => Ok(ValidityStatus::Validated),
            "invalidated" => Ok(ValidityStatus::Invalidated),
            other => Err(format!("unknown validity status `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidityRecord {
    pub status: ValidityStatus,
    pub notes: String,
}

/// Executable validation predicates over a (trace, context) pair.
#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    XNonDecreasing,
    LaneConstant,
    /// Finite-difference speed never exceeds the bound.
    SpeedAtMost(f64),
    /// The named context factor holds the given value.
    FactorIs(String, Value),
}

impl Check {
    pub fn evaluate(&self, trace: &Trajectory, context: &Context) -> bool {
        let s = &trace.samples;
        match self {
            Check::XNonDecreasing => s.windows(2).all(|w| w[1].x >= w[0].x),
            Check::LaneConstant => s.windows(2).all(|w| w[1].lane == w[0].lane),
            Check::SpeedAtMost(bound) => s.windows(2).all(|w| (w[1].x - w[0].x) / (w[1].t - w[0].t) <= *bound + 1e-9),
            Check::FactorIs(name, value) => context.get(name) == Some(value),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::XNonDecreasing => f.write_str("x_non_decreasing"),
            Check::LaneConstant => f.write_str("lane_constant"),
            Check::SpeedAtMost(v) => write!(f, "speed_at_most:{v}"),
            Check::FactorIs(n, v) => write!(f, "factor_is:{n}:{v}"),
        }
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.splitn(3, ':');
        match (parts.next(), parts.next(), parts.next()) {
            (Some("x_non_decreasing"), None, None) => Ok(Check::XNonDecreasing),
            (Some("lane_constant"), None, None) => Ok(Check::LaneConstant),
            (Some("speed_at_most"), Some(v), None) => v
                .parse()
                .map(Check::SpeedAtMost)
                .map_err(|_| format!("bad speed bound `{v}`")),
            (Some("factor_is"), Some(n), Some(v)) => Ok(Check::FactorIs(n.to_string(), v.parse()?)),
            _ => Err(format!("unknown validation check `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationCondition {
    pub name: String,
    pub check: Check,
    pub expected: bool,
}

/// Reference to the model implementation plus name-to-component tables for
/// properties and factors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelBinding {
    pub model: ModelId,
    pub property_map: BTreeMap<String, String>,
    pub factor_map: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityFrame {
    pub id: FrameId,
    pub binding: ModelBinding,
    pub pi: PropertySet,
    pub gamma: FactorSet,
    pub exec: ExecutionSpec,
    pub validity: ValidityRecord,
    pub validations: Vec<ValidationCondition>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("context is missing influencing factor `{0}`")]
    MissingFactor(String),
    #[error("factor `{0}` has a value of the wrong kind")]
    ValueKind(String),
    #[error("empty domain for `{0}`")]
    EmptyDomain(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("execution spec needs 0 < mean_cost <= wcet (wcet {wcet}, mean {mean_cost})")]
    BadCost { wcet: f64, mean_cost: f64 },
    #[error("frame `{frame}` maps `{name}` which is not among its properties or factors")]
    UnmappedName { frame: String, name: String },
}

impl ValidityFrame {
    pub fn new(id: &str, model: &str, pi: PropertySet, gamma: FactorSet, exec: ExecutionSpec) -> Self {
        ValidityFrame {
            id: FrameId::from(id),
            binding: ModelBinding {
                model: ModelId::from(model),
                ..Default::default()
            },
            pi,
            gamma,
            exec,
            validity: ValidityRecord::default(),
            validations: Vec::new(),
        }
    }

    pub fn wcet(&self) -> f64 {
        self.exec.wcet
    }

    pub fn is_invalidated(&self) -> bool {
        self.validity.status == ValidityStatus::Invalidated
    }

    /// Mapping tables may only name the frame's own properties and factors.
    pub fn check_mappings(&self) -> Result<(), FrameError> {
        let unmapped = |name: &String| FrameError::UnmappedName {
            frame: self.id.0.clone(),
            name: name.clone(),
        };
        if let Some(n) = self.binding.property_map.keys().find(|n| !self.pi.contains(n)) {
            return Err(unmapped(n));
        }
        if let Some(n) = self.binding.factor_map.keys().find(|n| !self.gamma.contains(n)) {
            return Err(unmapped(n));
        }
        Ok(())
    }
}

/// Whether every factor the frame constrains takes an allowed value in
/// `context`. Factors outside the frame's gamma are ignored.
pub fn frame_admits(frame: &ValidityFrame, context: &Context) -> Result<bool, FrameError> {
    for (name, domain) in frame.gamma.iter() {
        let value = context.get(name).ok_or_else(|| FrameError::MissingFactor(name.to_string()))?;
        match domain.contains(value) {
            Some(true) => {}
            Some(false) => return Ok(false),
            None => return Err(FrameError::ValueKind(name.to_string())),
        }
    }
    Ok(true)
}

/// Whether the frame answers for every requested property over at least
/// the requested range.
pub fn frame_covers(frame: &ValidityFrame, requested: &PropertySet) -> bool {
    requested
        .iter()
        .all(|(name, want)| frame.pi.get(name).is_some_and(|have| want.is_subset_of(have)))
}

/// Evaluates every validation condition. Any failure marks the frame
/// invalidated.
pub fn run_validations(frame: &mut ValidityFrame, trace: &Trajectory, context: &Context) -> Vec<(String, bool)> {
    let results: Vec<(String, bool)> = frame
        .validations
        .iter()
        .map(|c| (c.name.clone(), c.check.evaluate(trace, context) == c.expected))
        .collect();
    if let Some((name, _)) = results.iter().find(|(_, passed)| !passed) {
        frame.validity.status = ValidityStatus::Invalidated;
        frame.validity.notes = format!("validation `{name}` failed");
    }
    results
}
