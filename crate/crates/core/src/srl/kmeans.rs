//! Lloyd's k-means with k-means++ seeding and seeded restarts.
//!
//! After Lloyd's iterations converge, single-point transfers are applied
//! while they lower the SSE (Hartigan's criterion). A partition that admits
//! no such transfer is also a Lloyd fixpoint, so the refinement only ever
//! moves between Lloyd solutions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SrlError;
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    /// z-score each dimension before clustering.
    pub standardize: bool,
    #[serde(skip, default)]
    pub exec: Exec,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            seed: 0,
            restarts: 10,
            max_iter: 300,
            standardize: true,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    /// Centroids in the clustering space (standardized when requested).
    pub centroids: Vec<Vec<f64>>,
    /// Distance of each point to its centroid, clustering space.
    pub distances: Vec<f64>,
    pub sse: f64,
    pub iterations: usize,
    /// Index of the restart that produced this fit.
    pub restart: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-dimension z-scores (sample SD); constant dimensions become 0.
pub fn standardize(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let n = points.len() as f64;
    let mut out = points.to_vec();
    for j in 0..dim {
        let mean = points.iter().map(|p| p[j]).sum::<f64>() / n;
        let var = points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        for p in out.iter_mut() {
            p[j] = if sd > 0.0 { (p[j] - mean) / sd } else { 0.0 };
        }
    }
    out
}

fn centroids_of(points: &[Vec<f64>], labels: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    (sums, counts)
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    while centroids.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| {
                centroids
                    .iter()
                    .map(|c| sq_dist(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = d2.iter().rposition(|d| *d > 0.0).unwrap_or(0);
        for (i, d) in d2.iter().enumerate() {
            if *d > 0.0 && target < *d {
                pick = i;
                break;
            }
            target -= d;
        }
        centroids.push(points[pick].clone());
    }
    centroids
}

/// Moves single points between clusters while doing so lowers the SSE.
fn transfer_refine(points: &[Vec<f64>], labels: &mut [usize], k: usize) {
    let (mut centroids, mut counts) = centroids_of(points, labels, k);
    loop {
        let mut moved = false;
        for i in 0..points.len() {
            let a = labels[i];
            if counts[a] <= 1 {
                continue;
            }
            let na = counts[a] as f64;
            let cost_out = na / (na - 1.0) * sq_dist(&points[i], &centroids[a]);
            let mut best = None;
            let mut best_gain = 1e-12 * (1.0 + cost_out);
            for b in (0..k).filter(|b| *b != a) {
                let nb = counts[b] as f64;
                let cost_in = nb / (nb + 1.0) * sq_dist(&points[i], &centroids[b]);
                if cost_out - cost_in > best_gain {
                    best_gain = cost_out - cost_in;
                    best = Some(b);
                }
            }
            if let Some(b) = best {
                labels[i] = b;
                (centroids, counts) = centroids_of(points, labels, k);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

fn lloyd(
    points: &[Vec<f64>],
    k: usize,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, usize) {
    let mut centroids = plus_plus_init(points, k, rng);
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    let mut iterations = 1;
    while iterations < max_iter {
        let (mut next, counts) = centroids_of(points, &labels, k);
        // re-seed an emptied cluster with the point farthest from its centroid
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &next[labels[a]])
                            .total_cmp(&sq_dist(&points[b], &next[labels[b]]))
                    })
                    .unwrap();
                next[c] = points[far].clone();
            }
        }
        centroids = next;
        let relabel: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        iterations += 1;
        if relabel == labels {
            break;
        }
        labels = relabel;
    }
    (labels, iterations)
}

/// Runs `opts.restarts` seeded restarts and keeps the lowest-SSE fit; ties go
/// to the lowest restart index.
pub fn kmeans(points: &[Vec<f64>], k: usize, opts: &KMeansOptions) -> Result<KMeansFit, SrlError> {
    if points.len() < k.max(2) {
        return Err(SrlError::TooFewPoints {
            needed: k.max(2),
            got: points.len(),
        });
    }
    if points.iter().all(|p| p == &points[0]) {
        return Err(SrlError::AllPointsIdentical);
    }
    let space = if opts.standardize {
        standardize(points)
    } else {
        points.to_vec()
    };
    let restarts = opts.restarts.max(1);

    let fits = opts.exec.map_range(restarts, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(r as u64);
        let (mut labels, iterations) = lloyd(&space, k, opts.max_iter, &mut rng);
        transfer_refine(&space, &mut labels, k);
        let (centroids, _) = centroids_of(&space, &labels, k);
        let distances: Vec<f64> = space
            .iter()
            .zip(&labels)
            .map(|(p, &l)| sq_dist(p, &centroids[l]).sqrt())
            .collect();
        let sse = distances.iter().map(|d| d * d).sum();
        KMeansFit {
            labels,
            centroids,
            distances,
            sse,
            iterations,
            restart: r,
        }
    });

    let mut best = 0;
    for (i, f) in fits.iter().enumerate() {
        if f.sse < fits[best].sse - 1e-12 * (1.0 + fits[best].sse) {
            best = i;
        }
    }
    Ok(fits.into_iter().nth(best).expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_few_and_identical() {
        assert!(matches!(
            kmeans(&[vec![1.0, 2.0]], 2, &KMeansOptions::default()),
            Err(SrlError::TooFewPoints { .. })
        ));
        assert!(matches!(
            kmeans(&vec![vec![1.0; 4]; 5], 2, &KMeansOptions::default()),
            Err(SrlError::AllPointsIdentical)
        ));
    }

    #[test]
    fn two_distinct_points() {
        let fit = kmeans(
            &[vec![0.0, 0.0], vec![1.0, 1.0]],
            2,
            &KMeansOptions::default(),
        )
        .unwrap();
        assert_ne!(fit.labels[0], fit.labels[1]);
        assert_eq!(fit.sse, 0.0);
    }

    #[test]
    fn deterministic_across_exec() {
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i * 7 % 11) as f64, (i * 3 % 5) as f64])
            .collect();
        let a = kmeans(
            &pts,
            2,
            &KMeansOptions {
                exec: Exec::Sequential,
                seed: 9,
                ..Default::default()
            },
        )
        .unwrap();
        let b = kmeans(
            &pts,
            2,
            &KMeansOptions {
                exec: Exec::Parallel,
                seed: 9,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn standardize_zero_mean_unit_sd() {
        let z = standardize(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]]);
        assert_eq!(
            z.iter().map(|p| p[0]).collect::<Vec<_>>(),
            vec![-1.0, 0.0, 1.0]
        );
        assert!(z.iter().all(|p| p[1] == 0.0));
    }
}
