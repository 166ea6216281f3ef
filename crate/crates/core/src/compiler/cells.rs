//! Splitting factor domains into the cells a tree test branches on.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::frames::{Domain, Value};
use crate::vfg::{Context, VfGraph};

/// A branch label: a boolean, an interval endpoint, or the open gap between
/// two neighbouring endpoints (possibly unbounded).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Flag(bool),
    Point(f64),
    Between(f64, f64),
}

impl Cell {
    pub fn contains(&self, value: &Value) -> bool {
        match (self, value) {
            (Cell::Flag(b), Value::Bool(v)) => b == v,
            (Cell::Point(p), Value::Real(x)) => p == x,
            (Cell::Between(a, b), Value::Real(x)) => a < x && x < b,
            _ => false,
        }
    }

    /// Some value lying in the cell.
    pub fn representative(&self) -> Value {
        match *self {
            Cell::Flag(b) => Value::Bool(b),
            Cell::Point(p) => Value::Real(p),
            Cell::Between(a, b) => Value::Real(match (a.is_finite(), b.is_finite()) {
                (true, true) => 0.5 * (a + b),
                (false, true) => b - 1.0,
                (true, false) => a + 1.0,
                (false, false) => 0.0,
            }),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Flag(b) => write!(f, "{b}"),
            Cell::Point(p) => write!(f, "={p}"),
            Cell::Between(a, b) => write!(f, "({a},{b})"),
        }
    }
}

impl FromStr for Cell {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("bad number `{x}` in cell `{s}`"));
        match s {
            "true" => Ok(Cell::Flag(true)),
            "false" => Ok(Cell::Flag(false)),
            _ => {
                if let Some(p) = s.strip_prefix('=') {
                    return Ok(Cell::Point(num(p)?));
                }
                let inner = s
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| format!("unrecognised cell `{s}`"))?;
                let (a, b) = inner.split_once(',').ok_or_else(|| format!("unrecognised cell `{s}`"))?;
                Ok(Cell::Between(num(a)?, num(b)?))
            }
        }
    }
}

/// Cells partitioning the value space of one factor, given the domains that
/// constrain it. Empty if nothing constrains it.
pub(crate) fn cells_for<'a>(domains: impl Iterator<Item = &'a Domain>) -> Vec<Cell> {
    let mut flags = false;
    let mut ends: Vec<f64> = Vec::new();
    for d in domains {
        match d {
            Domain::Flags(_) => flags = true,
            Domain::Interval { lo, hi } => ends.extend([*lo, *hi]),
        }
    }
    if flags {
        return vec![Cell::Flag(false), Cell::Flag(true)];
    }
    ends.retain(|e| e.is_finite());
    if ends.is_empty() {
        // Only unbounded intervals: every real is admitted alike.
        return Vec::new();
    }
    ends.sort_by(f64::total_cmp);
    ends.dedup();
    let mut cells = vec![Cell::Between(f64::NEG_INFINITY, ends[0])];
    for (i, e) in ends.iter().enumerate() {
        cells.push(Cell::Point(*e));
        let next = ends.get(i + 1).copied().unwrap_or(f64::INFINITY);
        cells.push(Cell::Between(*e, next));
    }
    cells
}

/// Cells of every influencing factor over the whole graph.
pub fn factor_cells(graph: &VfGraph) -> BTreeMap<String, Vec<Cell>> {
    graph
        .factor_names()
        .into_iter()
        .map(|f| {
            let cells = cells_for(graph.factor_domains(&f));
            (f, cells)
        })
        .collect()
}

/// One context per combination of factor cells: booleans both ways,
/// interval endpoints and a point inside each gap.
pub fn enumerate_contexts(graph: &VfGraph) -> Vec<Context> {
    let mut out = vec![Context::new()];
    for (factor, cells) in factor_cells(graph) {
        let cells = if cells.is_empty() { vec![Cell::Between(f64::NEG_INFINITY, f64::INFINITY)] } else { cells };
        out = out
            .into_iter()
            .flat_map(|ctx| {
                cells
                    .iter()
                    .map(|c| ctx.clone().with(factor.clone(), c.representative()))
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_cells_cover_the_line() {
        let a = Domain::interval(0.0, 10.0).unwrap();
        let b = Domain::interval(5.0, 20.0).unwrap();
        let cells = cells_for([&a, &b].into_iter());
        assert_eq!(cells.len(), 9);
        for x in [-1.0, 0.0, 2.5, 5.0, 7.0, 10.0, 15.0, 20.0, 1e9] {
            let hits = cells.iter().filter(|c| c.contains(&Value::Real(x))).count();
            assert_eq!(hits, 1, "x={x}");
        }
        for c in &cells {
            assert!(c.contains(&c.representative()));
        }
    }

    #[test]
    fn cell_text_round_trip() {
        for c in [Cell::Flag(true), Cell::Point(2.5), Cell::Between(f64::NEG_INFINITY, 3.0), Cell::Between(1.0, f64::INFINITY)] {
            assert_eq!(c.to_string().parse::<Cell>().unwrap(), c);
        }
        assert!("maybe".parse::<Cell>().is_err());
    }

    #[test]
    fn flag_cells() {
        let d = Domain::flags([true]);
        assert_eq!(cells_for(std::iter::once(&d)), vec![Cell::Flag(false), Cell::Flag(true)]);
        assert!(cells_for(std::iter::empty()).is_empty());
    }
}
