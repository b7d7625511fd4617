//! K-medoids clustering with Euclidean distance.
//!
//! Initial medoids are the K points with the smallest total distance to all
//! others. All ties (initialization order, assignment, medoid updates) break
//! toward the lowest index, so clustering a dataset and clustering the same
//! dataset with every point duplicated pick medoids with identical values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Indices into the input point list.
    pub medoids: Vec<usize>,
    /// For each point, the medoid slot it belongs to.
    pub assignments: Vec<usize>,
    pub total_cost: f64,
    /// Cost after initialization and after each accepted update pass.
    pub cost_history: Vec<f64>,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn count_distinct(points: &[Vec<f64>]) -> usize {
    let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
    sorted.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    1 + sorted.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Assign every point to its nearest medoid (ties toward the lower slot);
/// returns (assignments, total cost). Empty slots are reseeded with the point
/// farthest from its assigned medoid.
fn assign(dist: &dyn Fn(usize, usize) -> f64, n: usize, medoids: &mut Vec<usize>) -> (Vec<usize>, f64) {
    loop {
        let mut assignments = vec![0usize; n];
        let mut cost = 0.0;
        let mut members = vec![0usize; medoids.len()];
        for i in 0..n {
            let mut best_slot = 0;
            let mut best_d = f64::INFINITY;
            for (slot, &m) in medoids.iter().enumerate() {
                let d = dist(i, m);
                if d < best_d {
                    best_d = d;
                    best_slot = slot;
                }
            }
            assignments[i] = best_slot;
            members[best_slot] += 1;
            cost += best_d;
        }
        let Some(empty_slot) = members.iter().position(|&c| c == 0) else {
            return (assignments, cost);
        };
        // Reseed the empty slot with the point farthest from its medoid.
        let mut far_idx = 0;
        let mut far_d = -1.0;
        for i in 0..n {
            let d = dist(i, medoids[assignments[i]]);
            if d > far_d {
                far_d = d;
                far_idx = i;
            }
        }
        medoids[empty_slot] = far_idx;
    }
}

/// Cluster `points` into `k` groups around member medoids. Alternates nearest
/// -medoid assignment with in-cluster medoid updates until the total
/// within-cluster distance stops strictly decreasing, then applies swap
/// refinement. Deterministic given the seed, which only drives the restart
/// subsets tried on small inputs; ties break structurally (lowest index).
pub fn fit_kmedoids(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::Validation("cluster count must be positive".into()));
    }
    if points.is_empty() {
        return Err(Error::Validation("no points to cluster".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Dimension("points differ in dimensionality".into()));
    }
    let distinct = count_distinct(points);
    if k > distinct {
        return Err(Error::Validation(format!(
            "cluster count {k} exceeds the {distinct} distinct points"
        )));
    }
    let n = points.len();
    // Materialize pairwise distances when that stays in tens of megabytes;
    // fall back to recomputing on the fly for very large inputs.
    let table: Option<Vec<f64>> = (n <= 4096).then(|| {
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = distance(&points[i], &points[j]);
                t[i * n + j] = d;
                t[j * n + i] = d;
            }
        }
        t
    });
    let dist = |i: usize, j: usize| match &table {
        Some(t) => t[i * n + j],
        None => distance(&points[i], &points[j]),
    };

    // Initialization: the K points with the smallest total distance to all
    // others, lowest index first on ties.
    let mut totals: Vec<(f64, usize)> = (0..n)
        .map(|i| ((0..n).map(|j| dist(i, j)).sum::<f64>(), i))
        .collect();
    totals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let init: Vec<usize> = totals[..k].iter().map(|&(_, i)| i).collect();

    let mut best = refine(&dist, n, k, init);

    // The local search can stall; on small inputs, where the extra work is
    // negligible, retry from seeded random subsets and keep the best result.
    if n <= 64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pool: Vec<usize> = (0..n).collect();
        for _ in 0..16 {
            for i in 0..k {
                let j = rng.random_range(i..n);
                pool.swap(i, j);
            }
            let restart = refine(&dist, n, k, pool[..k].to_vec());
            if restart.total_cost < best.total_cost {
                best = restart;
            }
        }
    }
    Ok(best)
}

/// Alternate assignment and in-cluster medoid updates until the cost stops
/// strictly decreasing, then greedily apply strictly improving medoid/non
/// -medoid swaps (in-cluster updates alone cannot move a point between
/// clusters, and stall in local optima that a single swap escapes).
fn refine(dist: &dyn Fn(usize, usize) -> f64, n: usize, k: usize, init: Vec<usize>) -> Clustering {
    let mut medoids = init;
    let (mut assignments, mut cost) = assign(dist, n, &mut medoids);
    let mut cost_history = vec![cost];

    loop {
        // Update step: per cluster, the member minimizing within-cluster
        // total distance (lowest index on ties).
        let mut candidate = medoids.clone();
        for slot in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| assignments[i] == slot).collect();
            let mut best_m = candidate[slot];
            let mut best_total = f64::INFINITY;
            for &m in &members {
                let total: f64 = members.iter().map(|&i| dist(i, m)).sum();
                if total < best_total {
                    best_total = total;
                    best_m = m;
                }
            }
            candidate[slot] = best_m;
        }
        let mut trial_medoids = candidate;
        let (trial_assignments, trial_cost) = assign(dist, n, &mut trial_medoids);
        if trial_cost < cost {
            medoids = trial_medoids;
            assignments = trial_assignments;
            cost = trial_cost;
            cost_history.push(cost);
        } else {
            break;
        }
    }

    loop {
        let mut best_swap: Option<(f64, usize, usize)> = None;
        for slot in 0..k {
            for point in 0..n {
                if medoids.contains(&point) {
                    continue;
                }
                let mut trial: Vec<usize> = medoids.clone();
                trial[slot] = point;
                let trial_cost: f64 = (0..n)
                    .map(|i| trial.iter().map(|&m| dist(i, m)).fold(f64::INFINITY, f64::min))
                    .sum();
                if trial_cost < cost && best_swap.as_ref().is_none_or(|&(b, ..)| trial_cost < b) {
                    best_swap = Some((trial_cost, slot, point));
                }
            }
        }
        let Some((_, slot, point)) = best_swap else { break };
        medoids[slot] = point;
        let (new_assignments, new_cost) = assign(dist, n, &mut medoids);
        assignments = new_assignments;
        cost = new_cost;
        cost_history.push(cost);
    }

    Clustering { medoids, assignments, total_cost: cost, cost_history }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points_1d(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|&v| vec![v]).collect()
    }

    /// Exhaustive search over all k-subsets of points as medoids.
    fn brute_force(points: &[Vec<f64>], k: usize) -> (Vec<usize>, f64) {
        let n = points.len();
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            let cost: f64 = (0..n)
                .map(|i| {
                    combo
                        .iter()
                        .map(|&m| distance(&points[i], &points[m]))
                        .fold(f64::INFINITY, f64::min)
                })
                .sum();
            if best.as_ref().is_none_or(|(_, b)| cost < *b) {
                best = Some((combo.clone(), cost));
            }
            // Next combination in lexicographic order.
            let mut i = k;
            loop {
                if i == 0 {
                    return best.unwrap();
                }
                i -= 1;
                if combo[i] < n - k + i {
                    combo[i] += 1;
                    for j in i + 1..k {
                        combo[j] = combo[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn separates_two_obvious_groups() {
        let points = points_1d(&[0.0, 1.0, 10.0, 11.0]);
        let c = fit_kmedoids(&points, 2, 0).unwrap();
        assert_eq!(c.assignments[0], c.assignments[1]);
        assert_eq!(c.assignments[2], c.assignments[3]);
        assert_ne!(c.assignments[0], c.assignments[2]);
        assert_eq!(c.total_cost, 2.0);
        let (_, brute_cost) = brute_force(&points, 2);
        assert_eq!(brute_cost, 2.0);
    }

    #[test]
    fn k_equal_points_means_zero_cost() {
        let points = points_1d(&[3.0, -1.0, 7.0, 2.5]);
        let c = fit_kmedoids(&points, 4, 9).unwrap();
        assert_eq!(c.total_cost, 0.0);
        let mut medoids = c.medoids.clone();
        medoids.sort_unstable();
        assert_eq!(medoids, vec![0, 1, 2, 3]);
    }

    #[test]
    fn duplicated_dataset_picks_the_same_medoid_values() {
        let base = [0.0, 1.0, 10.0, 11.0];
        let single = fit_kmedoids(&points_1d(&base), 2, 5).unwrap();
        let doubled_values: Vec<f64> = base.iter().chain(base.iter()).copied().collect();
        let doubled_points = points_1d(&doubled_values);
        let doubled = fit_kmedoids(&doubled_points, 2, 5).unwrap();

        let mut single_vals: Vec<f64> = single.medoids.iter().map(|&m| base[m]).collect();
        let mut doubled_vals: Vec<f64> = doubled.medoids.iter().map(|&m| doubled_values[m]).collect();
        single_vals.sort_by(f64::total_cmp);
        doubled_vals.sort_by(f64::total_cmp);
        assert_eq!(single_vals, doubled_vals);

        let (_, brute_cost) = brute_force(&doubled_points, 2);
        assert_eq!(doubled.total_cost, brute_cost);
    }

    #[test]
    fn rejects_k_beyond_distinct_points() {
        let points = points_1d(&[1.0, 1.0, 2.0]);
        assert!(fit_kmedoids(&points, 3, 0).is_err());
        assert!(fit_kmedoids(&points, 0, 0).is_err());
        assert!(fit_kmedoids(&points, 2, 0).is_ok());
    }

    #[test]
    fn medoids_are_members_and_assignments_are_nearest() {
        let values: Vec<f64> = (0..40).map(|i| ((i * 37) % 19) as f64 * 1.7).collect();
        let points = points_1d(&values);
        let c = fit_kmedoids(&points, 4, 3).unwrap();
        for (i, &slot) in c.assignments.iter().enumerate() {
            let d_assigned = distance(&points[i], &points[c.medoids[slot]]);
            for &m in &c.medoids {
                assert!(
                    d_assigned <= distance(&points[i], &points[m]) + 1e-12,
                    "point {i} not at its nearest medoid"
                );
            }
        }
        assert!(c.cost_history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn matches_brute_force_on_every_small_seeded_instance() {
        use rand::{Rng, SeedableRng};
        for seed in 0..100 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(4..=8);
            let k = rng.random_range(1..=3);
            let points: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)])
                .collect();
            let c = fit_kmedoids(&points, k, seed).unwrap();
            let (_, brute_cost) = brute_force(&points, k);
            assert!(
                (c.total_cost - brute_cost).abs() <= 1e-9 * brute_cost.max(1.0),
                "instance {seed} (n={n}, k={k}): {} vs optimum {brute_cost}",
                c.total_cost
            );
        }
    }

    proptest::proptest! {
        #[test]
        fn clustering_is_deterministic(seed in 0u64..50, n in 6usize..20) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let points: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(-5.0..5.0)])
                .collect();
            let a = fit_kmedoids(&points, 3, seed).unwrap();
            let b = fit_kmedoids(&points, 3, seed).unwrap();
            proptest::prop_assert_eq!(&a, &b);
        }
    }
}
