//! Ground-truth recovery scores and atlas-change metrics.

use zonegraph::atlas::jaccard;
use zonegraph::graph::NodeId;
use zonegraph::{Error, Result};

use crate::hungarian;

/// Precision/recall/F1; `defined` is false when the reported family was
/// empty and precision was set to 0 by convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub defined: bool,
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

fn overlap(a: &[NodeId], b: &[NodeId]) -> usize {
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                k += 1;
                i += 1;
                j += 1;
            }
        }
    }
    k
}

/// Max-overlap precision and recall between families of sorted node sets:
/// precision averages `max_j |Z ∩ Z★_j| / |Z|` over reported sets, recall
/// averages `max_Z |Z ∩ Z★_j| / |Z★_j|` over truth sets.
pub fn family_metrics(reported: &[Vec<NodeId>], truth: &[Vec<NodeId>]) -> Result<Scores> {
    if truth.is_empty() {
        return Err(Error::Empty("ground truth family"));
    }
    let reported: Vec<&Vec<NodeId>> = reported.iter().filter(|z| !z.is_empty()).collect();
    let recall = truth
        .iter()
        .map(|t| {
            reported
                .iter()
                .map(|z| overlap(z, t) as f64 / t.len() as f64)
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / truth.len() as f64;
    if reported.is_empty() {
        return Ok(Scores {
            precision: 0.0,
            recall,
            f1: 0.0,
            defined: false,
        });
    }
    let precision = reported
        .iter()
        .map(|z| {
            truth
                .iter()
                .map(|t| overlap(z, t) as f64 / z.len() as f64)
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / reported.len() as f64;
    Ok(Scores {
        precision,
        recall,
        f1: f1(precision, recall),
        defined: true,
    })
}

fn union(sets: &[Vec<NodeId>]) -> Vec<NodeId> {
    let mut all: Vec<NodeId> = sets.iter().flatten().copied().collect();
    all.sort_unstable();
    all.dedup();
    all
}

/// The same scores on the unions of both families.
pub fn node_metrics(reported: &[Vec<NodeId>], truth: &[Vec<NodeId>]) -> Result<Scores> {
    family_metrics(&[union(reported)], &[union(truth)])
}

/// Optimal one-to-one matching under cost `1 − J`, padded to a square
/// matrix with cost 1. Returns the partner of each reported set and the
/// mean Jaccard over matched real pairs (0 when none).
pub fn hungarian_match(
    reported: &[Vec<NodeId>],
    truth: &[Vec<NodeId>],
) -> Result<(Vec<Option<usize>>, f64)> {
    if reported.is_empty() || truth.is_empty() {
        return Err(Error::Empty("matching needs two nonempty families"));
    }
    let n = reported.len().max(truth.len());
    let mut jac = vec![vec![0.0; truth.len()]; reported.len()];
    let mut cost = vec![vec![1.0; n]; n];
    for (i, z) in reported.iter().enumerate() {
        for (j, t) in truth.iter().enumerate() {
            let jj = jaccard(z, t).unwrap_or(0.0);
            jac[i][j] = jj;
            cost[i][j] = 1.0 - jj;
        }
    }
    let assign = hungarian::solve(&cost);
    let partners: Vec<Option<usize>> = (0..reported.len())
        .map(|i| (assign[i] < truth.len()).then_some(assign[i]))
        .collect();
    let matched: Vec<f64> = partners
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|j| jac[i][j]))
        .collect();
    let mean = if matched.is_empty() {
        0.0
    } else {
        matched.iter().sum::<f64>() / matched.len() as f64
    };
    Ok((partners, mean))
}

fn best_match_mean(pre: &[Vec<NodeId>], post: &[Vec<NodeId>]) -> Result<f64> {
    if pre.is_empty() {
        return Err(Error::Empty("reference atlas"));
    }
    Ok(pre
        .iter()
        .map(|z| {
            post.iter()
                .map(|w| jaccard(z, w).unwrap_or(0.0))
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / pre.len() as f64)
}

/// `S_J`: mean over reference zones of the best Jaccard in `post`.
pub fn stability(pre: &[Vec<NodeId>], post: &[Vec<NodeId>]) -> Result<f64> {
    best_match_mean(pre, post)
}

/// `χ = 1 − S_J`.
pub fn churn(pre: &[Vec<NodeId>], post: &[Vec<NodeId>]) -> Result<f64> {
    best_match_mean(pre, post).map(|s| 1.0 - s)
}

/// Fraction of reference zones with no partner at `J ≥ tau`.
pub fn tau_churn(pre: &[Vec<NodeId>], post: &[Vec<NodeId>], tau: f64) -> Result<f64> {
    if pre.is_empty() {
        return Err(Error::Empty("reference atlas"));
    }
    let lost = pre
        .iter()
        .filter(|z| !post.iter().any(|w| jaccard(z, w).unwrap_or(0.0) >= tau))
        .count();
    Ok(lost as f64 / pre.len() as f64)
}

/// Share of planted blocks that keep at least 70% of their members at
/// `φ ≥ θ` yet have no post atlas zone at `J ≥ tau`. Returns
/// `(rate, defined)`; with no block meeting the retention condition the
/// rate is 0 and `defined` is false.
pub fn false_collapse_rate(
    truth: &[Vec<NodeId>],
    post: &[Vec<NodeId>],
    post_phi: &[f64],
    theta: f64,
    tau: f64,
) -> Result<(f64, bool)> {
    if truth.is_empty() {
        return Err(Error::Empty("ground truth family"));
    }
    let mut retained = 0usize;
    let mut collapsed = 0usize;
    for block in truth {
        let kept = block.iter().filter(|&&v| post_phi[v] >= theta).count();
        if (kept as f64) < 0.7 * block.len() as f64 {
            continue;
        }
        retained += 1;
        if !post.iter().any(|z| jaccard(z, block).unwrap_or(0.0) >= tau) {
            collapsed += 1;
        }
    }
    if retained == 0 {
        return Ok((0.0, false));
    }
    Ok((collapsed as f64 / retained as f64, true))
}

/// `|∪ atlas| / |V_θ|`; 0 when `V_θ` is empty.
pub fn coverage(atlas: &[Vec<NodeId>], threshold_set_size: usize) -> f64 {
    if threshold_set_size == 0 {
        0.0
    } else {
        union(atlas).len() as f64 / threshold_set_size as f64
    }
}

/// Mean pairwise Jaccard among atlas zones; 0 with fewer than two zones.
pub fn mean_pairwise_jaccard(atlas: &[Vec<NodeId>]) -> f64 {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..atlas.len() {
        for j in i + 1..atlas.len() {
            sum += jaccard(&atlas[i], &atlas[j]).unwrap_or(0.0);
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        sum / pairs as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_recovery() {
        let t = vec![vec![0, 1, 2], vec![3, 4]];
        let s = family_metrics(&t, &t).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        let (m, j) = hungarian_match(&t, &t).unwrap();
        assert_eq!(m, vec![Some(0), Some(1)]);
        assert_eq!(j, 1.0);
    }

    #[test]
    fn half_block() {
        let truth = vec![vec![0, 1, 2, 3]];
        let s = family_metrics(&[vec![0, 1]], &truth).unwrap();
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 0.5);
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_and_empty_reports() {
        let truth = vec![vec![0, 1]];
        assert_eq!(family_metrics(&[vec![5]], &truth).unwrap().precision, 0.0);
        let e = family_metrics(&[], &truth).unwrap();
        assert!(!e.defined);
        assert_eq!((e.precision, e.recall, e.f1), (0.0, 0.0, 0.0));
        assert!(family_metrics(&truth, &[]).is_err());
    }

    #[test]
    fn node_level_uses_unions() {
        let truth = vec![vec![0, 1], vec![2, 3]];
        let s = node_metrics(&[vec![0, 1, 2, 9]], &truth).unwrap();
        assert_eq!(s.precision, 0.75);
        assert_eq!(s.recall, 0.75);
    }

    #[test]
    fn padded_matching_leaves_one_unmatched() {
        let reported = vec![vec![0, 1], vec![2, 3], vec![0, 2]];
        let truth = vec![vec![0, 1], vec![2, 3]];
        let (m, j) = hungarian_match(&reported, &truth).unwrap();
        assert_eq!(m, vec![Some(0), Some(1), None]);
        // Brute force over all injections of truth into reported.
        let mut best = 0.0f64;
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    let s = jaccard(&reported[a], &truth[0]).unwrap()
                        + jaccard(&reported[b], &truth[1]).unwrap();
                    best = best.max(s / 2.0);
                }
            }
        }
        assert_eq!(j, best);
    }

    #[test]
    fn churn_and_stability() {
        let a = vec![vec![0, 1, 2], vec![5, 6]];
        assert_eq!(churn(&a, &a).unwrap(), 0.0);
        assert_eq!(stability(&a, &a).unwrap(), 1.0);
        assert_eq!(churn(&a, &[]).unwrap(), 1.0);
        assert_eq!(stability(&a, &[]).unwrap(), 0.0);
        assert!(churn(&[], &a).is_err());
        let ten: Vec<usize> = (0..10).collect();
        let eight: Vec<usize> = (0..8).collect();
        assert!((stability(&[ten], &[eight]).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(tau_churn(&a, &[vec![0, 1, 2]], 0.3).unwrap(), 0.5);
    }

    #[test]
    fn false_collapse_cases() {
        let truth = vec![(0..8).collect::<Vec<_>>()];
        let phi = vec![0.9; 10];
        let (rate, ok) = false_collapse_rate(&truth, &[(0..8).collect()], &phi, 0.5, 0.3).unwrap();
        assert_eq!((rate, ok), (0.0, true));
        // 75% retained, best overlap 2/10 = 0.2.
        let mut phi = vec![0.9; 10];
        phi[0] = 0.1;
        phi[1] = 0.1;
        let post = vec![vec![2, 3, 8, 9]];
        let j = jaccard(&post[0], &truth[0]).unwrap();
        assert!((j - 0.2).abs() < 1e-12);
        assert_eq!(
            false_collapse_rate(&truth, &post, &phi, 0.5, 0.3).unwrap(),
            (1.0, true)
        );
        let low = vec![0.0; 10];
        assert_eq!(
            false_collapse_rate(&truth, &post, &low, 0.5, 0.3).unwrap(),
            (0.0, false)
        );
    }

    #[test]
    fn coverage_and_overlap() {
        let a = vec![vec![0, 1], vec![1, 2]];
        assert_eq!(coverage(&a, 6), 0.5);
        assert!((mean_pairwise_jaccard(&a) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(mean_pairwise_jaccard(&a[..1]), 0.0);
    }
}
