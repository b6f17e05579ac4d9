//! Lower-bound layout oracle: runs every layout combination for each
//! intersection in a workload and charges only the cheapest one.

use super::intersect::intersect_with_stats;
use super::view::{materialize_as, materialize_set, Granularity, Layout, SetView};
use serde::{Deserialize, Serialize};

const ALL_LAYOUTS: [Layout; 3] = [Layout::Uint, Layout::Bitset, Layout::Composite];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub pairs: usize,
    /// Sum over the workload of the cheapest combination's cost.
    pub oracle_cost: u64,
    /// Total cost per fixed materialization granularity.
    pub granularity_costs: Vec<GranularityCost>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GranularityCost {
    pub granularity: String,
    pub cost: u64,
    /// Cost relative to the oracle, >= 1 for nonempty workloads.
    pub relative: f64,
}

fn granularity_name(g: Granularity) -> String {
    match g {
        Granularity::RelationLevel => "relation".into(),
        Granularity::SetLevel => "set".into(),
        Granularity::BlockLevel { .. } => "block".into(),
    }
}

/// Cost of one intersection under the instrumented kernels. Comparisons
/// are deterministic, unlike wall time, so reports are reproducible.
fn cost(a: &SetView, b: &SetView) -> u64 {
    let (_, stats) = intersect_with_stats(a, b);
    stats.comparisons.max(1)
}

/// Runs all layout combinations over every pair and reports the oracle
/// total next to each fixed-granularity total.
pub fn oracle_optimize(workload: &[(Vec<u32>, Vec<u32>)]) -> OracleReport {
    let granularities = [
        Granularity::RelationLevel,
        Granularity::SetLevel,
        Granularity::block_level(),
    ];
    let mut oracle_cost = 0u64;
    let mut totals = [0u64; 3];
    for (xs, ys) in workload {
        let mut best = u64::MAX;
        for la in ALL_LAYOUTS {
            for lb in ALL_LAYOUTS {
                let a = materialize_as(xs, la);
                let b = materialize_as(ys, lb);
                best = best.min(cost(&a, &b));
            }
        }
        // Granularity strategies are a subset of the combinations above,
        // modulo the set-level heuristic picking one of them.
        for (i, g) in granularities.iter().enumerate() {
            let a = materialize_set(xs, *g);
            let b = materialize_set(ys, *g);
            let c = cost(&a, &b);
            totals[i] += c;
            best = best.min(c);
        }
        oracle_cost += best;
    }
    OracleReport {
        pairs: workload.len(),
        oracle_cost,
        granularity_costs: granularities
            .iter()
            .zip(totals)
            .map(|(g, c)| GranularityCost {
                granularity: granularity_name(*g),
                cost: c,
                relative: if oracle_cost == 0 {
                    1.0
                } else {
                    c as f64 / oracle_cost as f64
                },
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_workload() {
        let report = oracle_optimize(&[]);
        assert_eq!(report.pairs, 0);
        assert_eq!(report.oracle_cost, 0);
    }

    #[test]
    fn oracle_never_beaten_by_fixed_strategy() {
        let workload: Vec<(Vec<u32>, Vec<u32>)> = vec![
            ((0..200).collect(), (100..300).collect()),
            (vec![1, 5, 9000], (0..4000).collect()),
            ((0..64).map(|i| i * 97).collect(), (0..64).map(|i| i * 101).collect()),
        ];
        let report = oracle_optimize(&workload);
        for g in &report.granularity_costs {
            assert!(g.cost >= report.oracle_cost, "{} beat the oracle", g.granularity);
            assert!(g.relative >= 1.0);
        }
    }

    #[test]
    fn dense_pairs_favor_bitsets() {
        // Identical dense pairs: the oracle's pick must cost no more than
        // the all-uint strategy.
        let dense: Vec<u32> = (0..512).collect();
        let workload = vec![(dense.clone(), dense.clone()); 4];
        let report = oracle_optimize(&workload);
        let relation = report
            .granularity_costs
            .iter()
            .find(|g| g.granularity == "relation")
            .unwrap();
        assert!(report.oracle_cost < relation.cost);
    }
}
