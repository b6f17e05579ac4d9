//! Dataset statistics and the symmetric-pruning preprocessor.

use super::StorageError;

/// Keeps exactly the edges with `src > dst`. Meaningful on symmetric
/// (undirected, both directions stored) edge relations, where clique-style
/// patterns recover the full result from the pruned half.
pub fn prune_symmetric(edges: &[(u32, u32)]) -> Vec<(u32, u32)> {
    edges.iter().copied().filter(|&(s, d)| s > d).collect()
}

/// Pearson's first coefficient of skew, `3 (mean - mode) / sigma`, over a
/// degree distribution. The mode is the smallest most-frequent degree.
pub fn density_skew(degrees: &[usize]) -> Result<f64, StorageError> {
    if degrees.is_empty() {
        return Err(StorageError::DegenerateDistribution);
    }
    let n = degrees.len() as f64;
    let mean = degrees.iter().sum::<usize>() as f64 / n;
    let var = degrees
        .iter()
        .map(|&d| (d as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    if var == 0.0 {
        return Err(StorageError::DegenerateDistribution);
    }
    let mut counts = std::collections::BTreeMap::new();
    for &d in degrees {
        *counts.entry(d).or_insert(0usize) += 1;
    }
    let best = counts.values().max().copied().unwrap();
    let mode = counts
        .iter()
        .find(|(_, &c)| c == best)
        .map(|(&d, _)| d)
        .unwrap() as f64;
    Ok(3.0 * (mean - mode) / var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prune_keeps_src_greater_than_dst() {
        let edges = [(0, 1), (1, 0), (2, 1), (1, 2)];
        let mut pruned = prune_symmetric(&edges);
        pruned.sort();
        assert_eq!(pruned, vec![(1, 0), (2, 1)]);
    }

    #[test]
    fn prune_empty() {
        assert!(prune_symmetric(&[]).is_empty());
    }

    #[test]
    fn prune_k3_keeps_half() {
        let edges = [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)];
        assert_eq!(prune_symmetric(&edges).len(), 3);
    }

    #[test]
    fn skew_formula() {
        // degrees [1,1,4]: mean 2, mode 1, sigma sqrt(2)
        let skew = density_skew(&[1, 1, 4]).unwrap();
        assert!((skew - 3.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn skew_zero_when_mean_equals_mode() {
        assert_eq!(density_skew(&[1, 2, 2, 3]).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_distribution_rejected() {
        assert!(matches!(
            density_skew(&[3, 3, 3]),
            Err(StorageError::DegenerateDistribution)
        ));
        assert!(matches!(
            density_skew(&[]),
            Err(StorageError::DegenerateDistribution)
        ));
    }
}
