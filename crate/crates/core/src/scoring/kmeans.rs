//! Lloyd's k-means with seeded k-means++ initialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SitingError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after each assignment step.
    pub history: Vec<f64>,
    pub iterations: usize,
}

/// Mixes a run seed with a stream label so that independent consumers of
/// randomness never share a stream.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, then a splitmix64 finalizer over the mix
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, dist2(point, &centroids[0]));
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = dist2(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, w) in d2.iter().enumerate() {
                if *w <= 0.0 {
                    continue;
                }
                acc += w;
                chosen = Some(i);
                if target < acc {
                    break;
                }
            }
            chosen.expect("positive total implies a positive weight")
        } else {
            rng.gen_range(0..n)
        };
        let c = points[pick].clone();
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Clusters `points` into `k` groups. Deterministic for fixed inputs and seed.
///
/// A cluster left empty by an assignment step is re-seeded at the point
/// farthest from its own centroid (lowest index on ties). When every point
/// sits on its centroid the cluster stays empty.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<Clustering> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(SitingError::TooManyClusters { k, rows: n });
    }
    if max_iter == 0 {
        return Err(SitingError::invalid("max_iter", "must be at least 1"));
    }
    let dims = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);

    let mut assignments: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut next = Vec::with_capacity(n);
        let mut dists = Vec::with_capacity(n);
        for p in points {
            let (j, d) = nearest(p, &centroids);
            next.push(j);
            dists.push(d);
        }

        let mut counts = vec![0usize; k];
        for &j in &next {
            counts[j] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            let far =
                (0..n)
                    .filter(|&i| counts[next[i]] > 1)
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(b) if dists[b] >= dists[i] => Some(b),
                        _ => Some(i),
                    });
            // duplicates of a centroid are never split off
            let Some(far) = far.filter(|&i| dists[i] > 0.0) else {
                break;
            };
            counts[next[far]] -= 1;
            next[far] = j;
            counts[j] = 1;
            dists[far] = 0.0;
            centroids[j] = points[far].clone();
        }
        history.push(dists.iter().sum());

        let stable = next == assignments;
        assignments = next;

        let mut sums = vec![vec![0.0; dims]; k];
        for (p, &j) in points.iter().zip(&assignments) {
            for (s, v) in sums[j].iter_mut().zip(p) {
                *s += v;
            }
        }
        for (j, sum) in sums.into_iter().enumerate() {
            if counts[j] > 0 {
                centroids[j] = sum.into_iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        if stable {
            break;
        }
    }

    let inertia = points
        .iter()
        .zip(&assignments)
        .map(|(p, &j)| dist2(p, &centroids[j]))
        .sum();
    Ok(Clustering {
        assignments,
        centroids,
        inertia,
        history,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_is_mean() {
        let pts = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 8.0]];
        let c = kmeans(&pts, 1, 7, 50).unwrap();
        assert_eq!(c.assignments, vec![0, 0, 0]);
        assert_eq!(c.centroids[0], vec![2.0, 4.0]);
    }

    #[test]
    fn separates_two_groups() {
        let mut pts = Vec::new();
        for i in 0..5 {
            let e = i as f64 * 0.01;
            pts.push(vec![e, e]);
            pts.push(vec![10.0 + e, 10.0 - e]);
        }
        for seed in 0..20 {
            let c = kmeans(&pts, 2, seed, 100).unwrap();
            let a = c.assignments[0];
            for (i, &j) in c.assignments.iter().enumerate() {
                assert_eq!(j == a, i % 2 == 0, "seed {seed}");
            }
        }
    }

    #[test]
    fn duplicates_stay_together() {
        let pts = vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]];
        for seed in 0..10 {
            let c = kmeans(&pts, 3, seed, 20).unwrap();
            assert_eq!(c.assignments, vec![c.assignments[0]; 3]);
        }
    }

    #[test]
    fn rerun_is_identical() {
        let pts: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![((i * 37) % 11) as f64 / 11.0, ((i * 17) % 7) as f64 / 7.0])
            .collect();
        let a = kmeans(&pts, 4, 99, 100).unwrap();
        let b = kmeans(&pts, 4, 99, 100).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.inertia.to_bits(), b.inertia.to_bits());
    }

    #[test]
    fn errors() {
        let pts = vec![vec![0.0]];
        assert!(matches!(
            kmeans(&pts, 2, 0, 10),
            Err(SitingError::TooManyClusters { .. })
        ));
        assert!(kmeans(&pts, 0, 0, 10).is_err());
        assert!(kmeans(&pts, 1, 0, 0).is_err());
    }

    #[test]
    fn identical_points_never_leave_empty_clusters_behind() {
        let pts = vec![vec![1.0, 1.0]; 6];
        let c = kmeans(&pts, 3, 5, 20).unwrap();
        assert_eq!(c.inertia, 0.0);
        assert!(c.assignments.iter().all(|&j| j < 3));
    }

    #[test]
    fn empty_cluster_reseeds_at_farthest_point() {
        // duplicates force k-means++ to pick coincident centroids
        let pts = vec![vec![0.0], vec![0.0], vec![0.0], vec![5.0]];
        let c = kmeans(&pts, 3, 1, 20).unwrap();
        let counts = (0..3).filter(|j| c.assignments.contains(j)).count();
        assert!(counts >= 2);
        assert_eq!(c.inertia, 0.0);
    }

    #[test]
    fn derived_seeds_differ_by_label() {
        assert_ne!(derive_seed(1, "water"), derive_seed(1, "land"));
        assert_eq!(derive_seed(1, "water"), derive_seed(1, "water"));
    }
}
