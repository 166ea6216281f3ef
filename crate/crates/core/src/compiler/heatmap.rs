//! Run-time context frequencies and the factor ordering derived from them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{Cell, CompileError, DecisionTree};
use crate::vfg::Context;

/// A discretised context: one cell label per factor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ContextCell(BTreeMap<String, String>);

impl ContextCell {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, factor: impl Into<String>, label: impl Into<String>) -> Self {
        self.0.insert(factor.into(), label.into());
        self
    }

    pub fn label(&self, factor: &str) -> Option<&str> {
        self.0.get(factor).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// A concrete context inside the cell.
    pub fn representative(&self) -> Result<Context, String> {
        let mut ctx = Context::new();
        for (f, label) in self.iter() {
            ctx.set(f, label.parse::<Cell>()?.representative());
        }
        Ok(ctx)
    }
}

impl fmt::Display for ContextCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(";"))
    }
}

impl FromStr for ContextCell {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut cell = ContextCell::new();
        for part in s.split(';').filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("expected factor=cell, got `{part}`"))?;
            if cell.0.insert(k.to_string(), v.to_string()).is_some() {
                return Err(format!("factor `{k}` appears twice"));
            }
        }
        Ok(cell)
    }
}

/// Observation counts per context cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HeatMap {
    counts: BTreeMap<ContextCell, u64>,
}

impl HeatMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, cell: ContextCell) {
        self.add(cell, 1);
    }

    pub fn add(&mut self, cell: ContextCell, count: u64) {
        *self.counts.entry(cell).or_default() += count;
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn count(&self, cell: &ContextCell) -> u64 {
        self.counts.get(cell).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ContextCell, u64)> {
        self.counts.iter().map(|(c, n)| (c, *n))
    }

    pub fn frequencies(&self) -> Vec<(ContextCell, f64)> {
        let total = self.total() as f64;
        self.iter().map(|(c, n)| (c.clone(), n as f64 / total)).collect()
    }

    /// Mass not on the factor's most frequent label. A factor that barely
    /// varies scores low.
    fn spread(&self, factor: &str) -> u64 {
        let mut by_label: BTreeMap<Option<&str>, u64> = BTreeMap::new();
        for (cell, n) in self.iter() {
            *by_label.entry(cell.label(factor)).or_default() += n;
        }
        self.total() - by_label.values().copied().max().unwrap_or(0)
    }
}

/// Factors that vary most in the observed contexts are tested first. The
/// sort is stable, so equal factors keep their input order; an empty heat
/// map leaves the order unchanged.
pub fn order_factors_by_heatmap(heatmap: &HeatMap, factors: &[String]) -> Vec<String> {
    let mut out = factors.to_vec();
    if heatmap.is_empty() {
        return out;
    }
    out.sort_by_key(|f| std::cmp::Reverse(heatmap.spread(f)));
    out
}

/// Frequency-weighted number of tree nodes visited per lookup.
pub fn expected_path_length(tree: &DecisionTree, heatmap: &HeatMap) -> Result<f64, CompileError> {
    let total = heatmap.total();
    if total == 0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (cell, n) in heatmap.iter() {
        let ctx = cell.representative().map_err(|_| CompileError::ValueKind(cell.to_string()))?;
        sum += n as f64 * tree.path_length(&ctx)? as f64;
    }
    Ok(sum / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn cell_text_round_trip() {
        let c = ContextCell::new().with("blinking", "false").with("braking", "true");
        assert_eq!(c.to_string(), "blinking=false;braking=true");
        assert_eq!(c.to_string().parse::<ContextCell>().unwrap(), c);
        assert!("a=1;a=2".parse::<ContextCell>().is_err());
    }

    #[test]
    fn empty_map_keeps_order() {
        let f = names(&["b", "a"]);
        assert_eq!(order_factors_by_heatmap(&HeatMap::new(), &f), f);
    }

    #[test]
    fn varying_factor_goes_first() {
        let mut hm = HeatMap::new();
        hm.add(ContextCell::new().with("a", "false").with("b", "false"), 50);
        hm.add(ContextCell::new().with("a", "false").with("b", "true"), 45);
        hm.add(ContextCell::new().with("a", "true").with("b", "false"), 5);
        assert_eq!(order_factors_by_heatmap(&hm, &names(&["a", "b"])), names(&["b", "a"]));
        assert_eq!(order_factors_by_heatmap(&hm, &names(&["b", "a"])), names(&["b", "a"]));
    }

    #[test]
    fn frequencies_sum_to_one() {
        let mut hm = HeatMap::new();
        hm.record(ContextCell::new().with("a", "true"));
        hm.add(ContextCell::new().with("a", "false"), 3);
        assert_eq!(hm.total(), 4);
        let s: f64 = hm.frequencies().iter().map(|(_, p)| p).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn ordering_is_a_permutation(counts in proptest::collection::vec(0u64..20, 8)) {
            let mut hm = HeatMap::new();
            for (i, n) in counts.iter().enumerate() {
                let cell = ContextCell::new()
                    .with("a", (i & 1 == 1).to_string())
                    .with("b", (i & 2 == 2).to_string())
                    .with("c", (i & 4 == 4).to_string());
                hm.add(cell, *n);
            }
            let f = names(&["a", "b", "c"]);
            let mut got = order_factors_by_heatmap(&hm, &f);
            got.sort();
            prop_assert_eq!(got, f);
        }
    }
}
