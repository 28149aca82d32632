use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_ITERATIONS: usize = 50;
const TOLERANCE: f64 = 1e-6;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            // every point coincides with a centroid
            Err(_) => rng.gen_range(0..points.len()),
        };
        centroids.push(points[next].clone());
        let c = centroids.last().unwrap();
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, c));
        }
    }
    centroids
}

fn centroid_of(points: &[Vec<f64>], members: impl Iterator<Item = usize>, dim: usize) -> Vec<f64> {
    let mut sum = vec![0.0; dim];
    let mut n = 0usize;
    for i in members {
        for (s, x) in sum.iter_mut().zip(&points[i]) {
            *s += x;
        }
        n += 1;
    }
    if n > 0 {
        for s in &mut sum {
            *s /= n as f64;
        }
    }
    sum
}

/// Moves the farthest point of the largest cluster into each empty cluster.
fn repair_empty(points: &[Vec<f64>], assign: &mut [usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    let dim = points[0].len();
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assign.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let largest = (0..k).max_by_key(|&j| (sizes[j], std::cmp::Reverse(j))).unwrap();
        let mut far = usize::MAX;
        let mut far_d = f64::NEG_INFINITY;
        for (i, &a) in assign.iter().enumerate() {
            if a == largest {
                let d = dist2(&points[i], &centroids[largest]);
                if d > far_d {
                    far = i;
                    far_d = d;
                }
            }
        }
        assign[far] = empty;
        for j in [largest, empty] {
            centroids[j] = centroid_of(points, (0..points.len()).filter(|&i| assign[i] == j), dim);
        }
    }
}

/// Seeded k-means++ returning up to `k` nonempty clusters of point indices.
///
/// When `k` is at least the number of points every point is its own cluster.
/// Clusters are listed in centroid order; indices inside a cluster ascend.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<usize>> {
    if points.is_empty() || k == 0 {
        return Vec::new();
    }
    if k >= points.len() {
        return (0..points.len()).map(|i| vec![i]).collect();
    }
    let dim = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    repair_empty(points, &mut assign, &mut centroids);

    for _ in 0..MAX_ITERATIONS {
        let updated: Vec<Vec<f64>> = (0..k)
            .map(|j| centroid_of(points, (0..points.len()).filter(|&i| assign[i] == j), dim))
            .collect();
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| dist2(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        let changed = next != assign;
        assign = next;
        repair_empty(points, &mut assign, &mut centroids);
        if !changed && shift < TOLERANCE {
            break;
        }
    }

    let mut clusters = vec![Vec::new(); k];
    for (i, &a) in assign.iter().enumerate() {
        clusters[a].push(i);
    }
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Box-Muller on top of the seeded generator.
    fn gaussian<R: Rng>(rng: &mut R) -> f64 {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    fn sorted(mut clusters: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
        clusters.sort();
        clusters
    }

    #[test]
    fn separated_points_become_singletons() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![100.0, 0.0],
            vec![0.0, 100.0],
            vec![100.0, 100.0],
        ];
        assert_eq!(
            sorted(kmeans(&pts, 4, 1)),
            vec![vec![0], vec![1], vec![2], vec![3]]
        );
        let five: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * 50.0]).collect();
        let clusters = kmeans(&five, 4, 3);
        assert_eq!(clusters.len(), 4);
        assert!(clusters.iter().all(|c| !c.is_empty()));
    }

    #[test]
    fn single_cluster() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 1.0]).collect();
        assert_eq!(kmeans(&pts, 1, 9), vec![(0..10).collect::<Vec<_>>()]);
    }

    #[test]
    fn identical_points_never_leave_a_cluster_empty() {
        let pts = vec![vec![1.0, 1.0]; 9];
        let clusters = kmeans(&pts, 4, 2);
        assert_eq!(clusters.len(), 4);
        assert!(clusters.iter().all(|c| !c.is_empty()));
        let total: usize = clusters.iter().map(Vec::len).sum();
        assert_eq!(total, 9);
    }

    #[test]
    fn gaussian_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pts = Vec::new();
        for i in 0..100 {
            let cx = if i < 50 { -5.0 } else { 5.0 };
            pts.push(vec![cx + gaussian(&mut rng), gaussian(&mut rng)]);
        }
        let clusters = sorted(kmeans(&pts, 2, 4));
        assert_eq!(clusters[0], (0..50).collect::<Vec<_>>());
        assert_eq!(clusters[1], (50..100).collect::<Vec<_>>());
        // every point is nearest to its own cluster's centroid
        let centroids: Vec<Vec<f64>> = clusters
            .iter()
            .map(|c| centroid_of(&pts, c.iter().copied(), 2))
            .collect();
        for (j, c) in clusters.iter().enumerate() {
            for &i in c {
                assert_eq!(nearest(&pts[i], &centroids), j);
            }
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()])
            .collect();
        assert_eq!(kmeans(&pts, 4, 77), kmeans(&pts, 4, 77));
    }
}
