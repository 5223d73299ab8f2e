use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::retrieval::EmbeddingVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansOptions {
    pub max_iterations: usize,
    /// Independent restarts; the lowest inertia wins.
    pub restarts: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            restarts: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub clusters: BTreeMap<String, usize>,
    pub sizes: Vec<usize>,
    pub min_size: usize,
    pub max_size: usize,
    /// Sum of squared distances to the assigned centroid.
    pub inertia: f64,
    pub iterations: usize,
    /// Cluster sizes after every assignment step of the winning restart.
    pub size_trace: Vec<Vec<usize>>,
}

impl ClusterAssignment {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = &str> {
        self.clusters
            .iter()
            .filter(move |(_, c)| **c == cluster)
            .map(|(d, _)| d.as_str())
    }

    pub fn same_cluster(&self, a: &str, b: &str) -> bool {
        matches!((self.clusters.get(a), self.clusters.get(b)), (Some(x), Some(y)) if x == y)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means whose every cluster holds between `min_size` and `max_size` points.
///
/// Each assignment step fills clusters greedily by distance under the size
/// caps, moves points into clusters below the minimum at the least cost, then
/// applies single moves and pairwise swaps until none lowers the cost. Points
/// are processed in `db_id` order and all randomness comes from `seed`.
pub fn constrained_kmeans(
    vectors: &BTreeMap<String, EmbeddingVector>,
    k: usize,
    min_size: usize,
    max_size: usize,
    seed: u64,
    options: KMeansOptions,
) -> Result<ClusterAssignment> {
    let n = vectors.len();
    if k == 0 || min_size > max_size || k * min_size > n || k.saturating_mul(max_size) < n {
        return Err(Error::InfeasibleBounds(format!(
            "{n} points cannot form {k} clusters of size {min_size}..={max_size}"
        )));
    }
    let dims: Vec<usize> = vectors.values().map(EmbeddingVector::dimension).collect();
    if let Some(w) = dims.windows(2).find(|w| w[0] != w[1]) {
        return Err(Error::DimensionMismatch {
            left: w[0],
            right: w[1],
        });
    }
    let points: Vec<&[f64]> = vectors.values().map(EmbeddingVector::values).collect();
    let bounds = Bounds {
        k,
        min_size,
        max_size,
    };
    let mut best: Option<Run> = None;
    for restart in 0..options.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
        let run = lloyd(&points, bounds, &mut rng, options.max_iterations.max(1));
        if best
            .as_ref()
            .is_none_or(|b| run.inertia < b.inertia - 1e-12)
        {
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");
    let mut sizes = vec![0; k];
    for &c in &run.labels {
        sizes[c] += 1;
    }
    Ok(ClusterAssignment {
        clusters: vectors.keys().cloned().zip(run.labels).collect(),
        sizes,
        min_size,
        max_size,
        inertia: run.inertia,
        iterations: run.iterations,
        size_trace: run.trace,
    })
}

#[derive(Clone, Copy)]
struct Bounds {
    k: usize,
    min_size: usize,
    max_size: usize,
}

struct Run {
    labels: Vec<usize>,
    inertia: f64,
    iterations: usize,
    trace: Vec<Vec<usize>>,
}

fn plus_plus(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.gen_range(0..points.len())].to_vec()];
    while centers.len() < k {
        let d: Vec<f64> = points
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|c| sq_dist(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d.iter().sum();
        let pick = if total <= 0.0 {
            rng.gen_range(0..points.len())
        } else {
            let mut target = rng.gen::<f64>() * total;
            d.iter()
                .position(|&w| {
                    target -= w;
                    target < 0.0
                })
                .unwrap_or(points.len() - 1)
        };
        centers.push(points[pick].to_vec());
    }
    centers
}

fn lloyd(points: &[&[f64]], b: Bounds, rng: &mut ChaCha8Rng, max_iterations: usize) -> Run {
    let mut centers = plus_plus(points, b.k, rng);
    let mut labels: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iterations {
        iterations += 1;
        let next = assign(points, &centers, b);
        let mut sizes = vec![0; b.k];
        for &c in &next {
            sizes[c] += 1;
        }
        trace.push(sizes);
        let stable = next == labels;
        labels = next;
        centers = update(points, &labels, &centers);
        if stable {
            break;
        }
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &c)| sq_dist(p, &centers[c]))
        .sum();
    Run {
        labels,
        inertia,
        iterations,
        trace,
    }
}

fn update(points: &[&[f64]], labels: &[usize], old: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; old.len()];
    let mut counts = vec![0usize; old.len()];
    for (p, &c) in points.iter().zip(labels) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p.iter()) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(old)
        .map(|((s, c), o)| {
            if c == 0 {
                o.clone()
            } else {
                s.into_iter().map(|v| v / c as f64).collect()
            }
        })
        .collect()
}

fn assign(points: &[&[f64]], centers: &[Vec<f64>], b: Bounds) -> Vec<usize> {
    let n = points.len();
    let cost: Vec<Vec<f64>> = points
        .iter()
        .map(|p| centers.iter().map(|c| sq_dist(p, c)).collect())
        .collect();
    let mut order: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..b.k).map(move |c| (i, c))).collect();
    order.sort_by(|x, y| cost[x.0][x.1].total_cmp(&cost[y.0][y.1]).then(x.cmp(y)));
    let mut labels = vec![usize::MAX; n];
    let mut sizes = vec![0usize; b.k];
    for (i, c) in order {
        if labels[i] == usize::MAX && sizes[c] < b.max_size {
            labels[i] = c;
            sizes[c] += 1;
        }
    }
    // fill clusters below the minimum from clusters that can spare a point
    while let Some(short) = (0..b.k).find(|&c| sizes[c] < b.min_size) {
        let (i, _) = (0..n)
            .filter(|&i| labels[i] != short && sizes[labels[i]] > b.min_size)
            .map(|i| (i, cost[i][short] - cost[i][labels[i]]))
            .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
            .expect("feasible bounds leave a donor");
        sizes[labels[i]] -= 1;
        labels[i] = short;
        sizes[short] += 1;
    }
    const EPS: f64 = 1e-12;
    for _ in 0..(4 * n).max(50) {
        let mut improved = false;
        for i in 0..n {
            let from = labels[i];
            if sizes[from] > b.min_size {
                if let Some(to) = (0..b.k)
                    .filter(|&c| {
                        c != from && sizes[c] < b.max_size && cost[i][c] < cost[i][from] - EPS
                    })
                    .min_by(|&x, &y| cost[i][x].total_cmp(&cost[i][y]))
                {
                    sizes[from] -= 1;
                    sizes[to] += 1;
                    labels[i] = to;
                    improved = true;
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (ci, cj) = (labels[i], labels[j]);
                if ci != cj && cost[i][cj] + cost[j][ci] < cost[i][ci] + cost[j][cj] - EPS {
                    labels[i] = cj;
                    labels[j] = ci;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vecs(points: &[(f64, f64)]) -> BTreeMap<String, EmbeddingVector> {
        points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| {
                (
                    format!("db{i:02}"),
                    EmbeddingVector::new(vec![x, y]).unwrap(),
                )
            })
            .collect()
    }

    #[test]
    fn identical_points_split_evenly() {
        let a = constrained_kmeans(
            &vecs(&[(1.0, 1.0); 10]),
            2,
            5,
            5,
            7,
            KMeansOptions::default(),
        )
        .unwrap();
        assert_eq!(a.sizes, [5, 5]);
    }

    #[test]
    fn blobs_recovered() {
        let mut pts = Vec::new();
        for i in 0..5 {
            pts.push((0.0 + i as f64 * 0.01, 0.0));
            pts.push((10.0, 10.0 + i as f64 * 0.01));
        }
        let a = constrained_kmeans(&vecs(&pts), 2, 5, 5, 1, KMeansOptions::default()).unwrap();
        for i in (0..10).step_by(2) {
            assert!(a.same_cluster("db00", &format!("db{i:02}")));
            assert!(!a.same_cluster("db00", &format!("db{:02}", i + 1)));
        }
    }

    #[test]
    fn infeasible() {
        let v = vecs(&[(0.0, 0.0); 5]);
        assert!(matches!(
            constrained_kmeans(&v, 2, 3, 3, 0, KMeansOptions::default()),
            Err(Error::InfeasibleBounds(_))
        ));
        assert!(matches!(
            constrained_kmeans(&v, 2, 1, 2, 0, KMeansOptions::default()),
            Err(Error::InfeasibleBounds(_))
        ));
        assert!(constrained_kmeans(&v, 0, 0, 5, 0, KMeansOptions::default()).is_err());
    }

    #[test]
    fn deterministic() {
        let pts: Vec<(f64, f64)> = (0..30)
            .map(|i| ((i * 7 % 11) as f64, (i * 5 % 13) as f64))
            .collect();
        let a = constrained_kmeans(&vecs(&pts), 4, 6, 9, 42, KMeansOptions::default()).unwrap();
        let b = constrained_kmeans(&vecs(&pts), 4, 6, 9, 42, KMeansOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn bounds_hold_every_iteration(
            pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 4..40),
            k in 1usize..5,
            slack in 0usize..3,
            seed in any::<u64>(),
        ) {
            let n = pts.len();
            prop_assume!(k <= n);
            let min = n / k - (n / k).min(slack);
            let max = n.div_ceil(k) + slack;
            let a = constrained_kmeans(&vecs(&pts), k, min, max, seed, KMeansOptions { max_iterations: 20, restarts: 2 }).unwrap();
            prop_assert_eq!(a.clusters.len(), n);
            for sizes in a.size_trace.iter().chain(std::iter::once(&a.sizes)) {
                prop_assert_eq!(sizes.iter().sum::<usize>(), n);
                prop_assert!(sizes.iter().all(|s| (min..=max).contains(s)));
            }
        }
    }
}
