//! Desk-scale analyses over front files: action-position flow counts,
//! relative cost comparison between two runs, and class-probability
//! statistics by action position. All of them read the line-delimited
//! front files and emit tidy, plot-ready data.

use std::collections::{BTreeMap, BTreeSet};

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use crate::front_io::{FrontHeader, FrontSolution};

// ---------------------------------------------------------------------------
// flows

/// Aggregated action-position flow counts over a set of solution
/// sequences. Positions are 1-based.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowCounts {
    /// (action, position) → number of sequences with that action there.
    pub positions: BTreeMap<(String, usize), u64>,
    /// (position of `to`, from, to) → number of adjacent pairs.
    pub pairs: BTreeMap<(usize, String, String), u64>,
    /// position → number of sequences ending exactly there.
    pub terminations: BTreeMap<usize, u64>,
}

impl FlowCounts {
    /// Tallies one sequence of action ids.
    pub fn add_sequence(&mut self, actions: &[String]) {
        for (i, action) in actions.iter().enumerate() {
            let position = i + 1;
            *self.positions.entry((action.clone(), position)).or_insert(0) += 1;
        }
        for (i, pair) in actions.windows(2).enumerate() {
            let to_position = i + 2;
            *self
                .pairs
                .entry((to_position, pair[0].clone(), pair[1].clone()))
                .or_insert(0) += 1;
        }
        if !actions.is_empty() {
            *self.terminations.entry(actions.len()).or_insert(0) += 1;
        }
    }

    /// Largest occupied position.
    pub fn max_position(&self) -> usize {
        self.positions.keys().map(|(_, p)| *p).max().unwrap_or(0)
    }

    /// Checks the conservation identity: everything that sits at position
    /// `t − 1` either continues into some action at `t` or terminates at
    /// `t − 1`. Exact integer arithmetic.
    pub fn verify_conservation(&self) -> Result<()> {
        for t in 2..=self.max_position() + 1 {
            let incoming: u64 = self
                .pairs
                .iter()
                .filter(|((pos, _, _), _)| *pos == t)
                .map(|(_, c)| *c)
                .sum();
            let terminated = self.terminations.get(&(t - 1)).copied().unwrap_or(0);
            let occupied: u64 = self
                .positions
                .iter()
                .filter(|((_, pos), _)| *pos == t - 1)
                .map(|(_, c)| *c)
                .sum();
            if incoming + terminated != occupied {
                bail!(
                    "flow conservation violated at position {t}: \
                     {incoming} continuing + {terminated} terminating != {occupied} occupying"
                );
            }
        }
        Ok(())
    }
}

/// Aggregates flow counts over every solution of every front.
pub fn aggregate_flows<'a, I>(fronts: I) -> FlowCounts
where
    I: IntoIterator<Item = &'a (FrontHeader, Vec<FrontSolution>)>,
{
    let mut counts = FlowCounts::default();
    for (_, solutions) in fronts {
        for sol in solutions {
            let actions: Vec<String> = sol.sequence.iter().map(|s| s.action.clone()).collect();
            counts.add_sequence(&actions);
        }
    }
    counts
}

/// Serialized form of [`FlowCounts`]: sorted flat records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowsFile {
    pub schema: String,
    pub version: String,
    /// Manifest hashes of the source front files.
    pub sources: Vec<String>,
    pub positions: Vec<PositionCount>,
    pub pairs: Vec<PairCount>,
    pub terminations: Vec<TerminationCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionCount {
    pub action: String,
    pub position: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCount {
    pub from: String,
    pub to: String,
    /// Position of `to` (so `from` sits at `position − 1`).
    pub position: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminationCount {
    pub position: usize,
    pub count: u64,
}

pub const FLOWS_SCHEMA: &str = "cscf.flows.v1";

impl FlowCounts {
    pub fn to_file(&self, version: &str, sources: Vec<String>) -> FlowsFile {
        FlowsFile {
            schema: FLOWS_SCHEMA.into(),
            version: version.into(),
            sources,
            positions: self
                .positions
                .iter()
                .map(|((action, position), count)| PositionCount {
                    action: action.clone(),
                    position: *position,
                    count: *count,
                })
                .collect(),
            pairs: self
                .pairs
                .iter()
                .map(|((position, from, to), count)| PairCount {
                    from: from.clone(),
                    to: to.clone(),
                    position: *position,
                    count: *count,
                })
                .collect(),
            terminations: self
                .terminations
                .iter()
                .map(|(position, count)| TerminationCount {
                    position: *position,
                    count: *count,
                })
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// cost comparison

/// Relative cost difference `(B − A) / max{A, B}`; positive means A is
/// cheaper. Zero when both sides are zero.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    let denom = a.max(b);
    if denom == 0.0 {
        0.0
    } else {
        (b - a) / denom
    }
}

/// Per-instance comparison row. `None` costs mean no solution satisfied
/// the length cap on that side; such rows render as "n/a".
#[derive(Debug, Clone, PartialEq)]
pub struct CostComparison {
    pub instance_id: String,
    pub cost_a: Option<f64>,
    pub cost_b: Option<f64>,
    pub relative: Option<f64>,
}

fn min_undiscounted(fronts: &[&(FrontHeader, Vec<FrontSolution>)], t_cap: usize) -> Option<f64> {
    fronts
        .iter()
        .flat_map(|(_, solutions)| solutions.iter())
        .filter(|s| s.sequence.len() <= t_cap)
        .map(|s| s.cost_undiscounted)
        .min_by(f64::total_cmp)
}

/// Compares the minimum undiscounted sequence cost (over solutions of
/// length ≤ `t_cap`) per instance between run A and run B.
pub fn compare_costs(
    a: &[(FrontHeader, Vec<FrontSolution>)],
    b: &[(FrontHeader, Vec<FrontSolution>)],
    t_cap: usize,
) -> Result<Vec<CostComparison>> {
    let ids = |side: &[(FrontHeader, Vec<FrontSolution>)]| -> BTreeSet<String> {
        side.iter().map(|(h, _)| h.instance_id.clone()).collect()
    };
    let ids_a = ids(a);
    let ids_b = ids(b);
    if ids_a != ids_b {
        bail!(
            "the two sides cover different instance ids: A = {:?}, B = {:?}",
            ids_a,
            ids_b
        );
    }

    fn by_id<'a>(
        side: &'a [(FrontHeader, Vec<FrontSolution>)],
        id: &str,
    ) -> Vec<&'a (FrontHeader, Vec<FrontSolution>)> {
        side.iter().filter(|(h, _)| h.instance_id == id).collect()
    }

    Ok(ids_a
        .iter()
        .map(|id| {
            let cost_a = min_undiscounted(&by_id(a, id), t_cap);
            let cost_b = min_undiscounted(&by_id(b, id), t_cap);
            let relative = match (cost_a, cost_b) {
                (Some(x), Some(y)) => Some(relative_difference(x, y)),
                _ => None,
            };
            CostComparison {
                instance_id: id.clone(),
                cost_a,
                cost_b,
                relative,
            }
        })
        .collect())
}

/// Renders comparison rows as CSV (`n/a` for missing sides).
pub fn render_comparison_csv(rows: &[CostComparison]) -> String {
    let mut out = String::from("instance_id,cost_a,cost_b,relative_difference\n");
    let cell = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| x.to_string());
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.instance_id,
            cell(row.cost_a),
            cell(row.cost_b),
            cell(row.relative),
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// class probability by position

/// One replayed step: the class probability right after `action` executed
/// at `position`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionSample {
    pub action: String,
    pub position: usize,
    pub probability: f64,
}

/// Median and tail percentiles of the samples of one (action, position).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionSummary {
    pub action: String,
    pub position: usize,
    pub count: usize,
    pub median: f64,
    pub p2_5: f64,
    pub p97_5: f64,
}

pub const POSITIONS_SCHEMA: &str = "cscf.positions.v1";

/// The probe-positions output document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionsFile {
    pub schema: String,
    pub version: String,
    pub sources: Vec<String>,
    pub samples: Vec<PositionSample>,
    pub summary: Vec<PositionSummary>,
}

/// Linear-interpolation percentile of pre-sorted values, `q ∈ [0, 1]`.
/// A single sample is its own percentile for every `q`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    if sorted.len() == 1 {
        return sorted[0];
    }
    let rank = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let w = rank - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Groups samples by (action, position) and computes median and 2.5/97.5
/// percentiles per group, sorted by action then position.
pub fn summarize_positions(samples: &[PositionSample]) -> Vec<PositionSummary> {
    let mut groups: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for s in samples {
        groups
            .entry((s.action.clone(), s.position))
            .or_default()
            .push(s.probability);
    }
    groups
        .into_iter()
        .map(|((action, position), mut probs)| {
            probs.sort_by(f64::total_cmp);
            PositionSummary {
                action,
                position,
                count: probs.len(),
                median: percentile(&probs, 0.5),
                p2_5: percentile(&probs, 0.025),
                p97_5: percentile(&probs, 0.975),
            }
        })
        .collect()
}
