use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::CentroidSet;
use crate::descriptor::Dataset;
use crate::error::{Error, Result};
use crate::par;
use crate::qd::sq_dist;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansReport {
    pub iterations: usize,
    /// Within-cluster sum of squares after each assignment step.
    pub inertia: Vec<f64>,
}

/// k-means++ seeding followed by Lloyd iterations until assignments stop
/// changing or `max_iter` updates have run.
///
/// With exactly `k` points the points themselves are returned; with fewer,
/// `k` points are drawn with replacement.
pub fn kmeans<R: Rng + ?Sized>(
    points: &Dataset,
    k: usize,
    max_iter: usize,
    seed: u64,
    rng: &mut R,
) -> Result<(CentroidSet, KMeansReport)> {
    let m = points.len();
    let d = points.dim();
    if m == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k-means needs k >= 1".into()));
    }
    if m <= k {
        let data = if m == k {
            points.as_slice().to_vec()
        } else {
            (0..k)
                .flat_map(|_| points.row(rng.gen_range(0..m)).to_vec())
                .collect()
        };
        let set = CentroidSet::new(d, data, seed)?;
        let inertia = set
            .nearest_many(points.as_slice())?
            .iter()
            .map(|h| h.1)
            .sum();
        return Ok((
            set,
            KMeansReport {
                iterations: 0,
                inertia: vec![inertia],
            },
        ));
    }

    let mut centroids = seed_plus_plus(points, k, rng)?;
    let mut assign =
        CentroidSet::new(d, centroids.clone(), seed)?.nearest_many(points.as_slice())?;
    let mut inertia = vec![assign.iter().map(|h| h.1).sum()];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0usize; k];
        for (row, &(c, _)) in points.rows().zip(&assign) {
            counts[c] += 1;
            for (s, v) in sums[c * d..(c + 1) * d].iter_mut().zip(row) {
                *s += v;
            }
        }
        let mut dist: Vec<f64> = assign.iter().map(|h| h.1).collect();
        for c in 0..k {
            let target = &mut centroids[c * d..(c + 1) * d];
            if counts[c] > 0 {
                for (t, s) in target.iter_mut().zip(&sums[c * d..(c + 1) * d]) {
                    *t = s / counts[c] as f64;
                }
                continue;
            }
            // empty cluster: move it onto the point worst served so far
            let (far, fd) = dist
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |b, (i, &v)| if v > b.1 { (i, v) } else { b },
                );
            if fd > 0.0 {
                target.copy_from_slice(points.row(far));
                dist[far] = 0.0;
            }
        }
        let next = CentroidSet::new(d, centroids.clone(), seed)?.nearest_many(points.as_slice())?;
        inertia.push(next.iter().map(|h| h.1).sum());
        let stable = next.iter().zip(&assign).all(|(a, b)| a.0 == b.0);
        assign = next;
        if stable {
            break;
        }
    }
    Ok((
        CentroidSet::new(d, centroids, seed)?,
        KMeansReport {
            iterations,
            inertia,
        },
    ))
}

fn seed_plus_plus<R: Rng + ?Sized>(points: &Dataset, k: usize, rng: &mut R) -> Result<Vec<f64>> {
    let m = points.len();
    let d = points.dim();
    let mut centroids = Vec::with_capacity(k * d);
    let first = rng.gen_range(0..m);
    centroids.extend_from_slice(points.row(first));
    let idx: Vec<usize> = (0..m).collect();
    let mut d2 = par::map(&idx, |&i| sq_dist(points.row(i), points.row(first)));
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            WeightedIndex::new(&d2)
                .map_err(|e| Error::InvalidConfig(format!("k-means++ weights: {e}")))?
                .sample(rng)
        } else {
            rng.gen_range(0..m)
        };
        let c = points.row(pick);
        centroids.extend_from_slice(c);
        let update = par::map(&idx, |&i| sq_dist(points.row(i), c));
        for (a, b) in d2.iter_mut().zip(update) {
            if b < *a {
                *a = b;
            }
        }
    }
    Ok(centroids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn single_cluster_is_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let data: Vec<f64> = (0..60).map(|i| (i * 37 % 17) as f64).collect();
        let ds = Dataset::new(3, data).unwrap();
        let (c, _) = kmeans(&ds, 1, 100, 0, &mut rng).unwrap();
        for (a, b) in c.row(0).iter().zip(ds.column_means()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_separated_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rows = Vec::new();
        for center in [0.0, 10.0] {
            for _ in 0..100 {
                rows.push(
                    (0..4)
                        .map(|_| center + rng.sample::<f64, _>(StandardNormal))
                        .collect::<Vec<_>>(),
                );
            }
        }
        let ds = Dataset::from_rows(4, &rows).unwrap();
        let (c, report) = kmeans(&ds, 2, 100, 0, &mut rng).unwrap();
        let means: Vec<Vec<f64>> = [0, 100]
            .iter()
            .map(|&s| {
                Dataset::from_rows(4, &rows[s..s + 100])
                    .unwrap()
                    .column_means()
            })
            .collect();
        for m in &means {
            let best = c
                .rows()
                .map(|r| sq_dist(r, m).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 0.1, "{best}");
        }
        assert!(report.inertia.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn k_equal_to_m_returns_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ds = Dataset::new(2, vec![0.0, 0.0, 1.0, 2.0, 3.0, 1.0]).unwrap();
        let (c, r) = kmeans(&ds, 3, 100, 9, &mut rng).unwrap();
        assert_eq!(c.as_slice(), ds.as_slice());
        assert_eq!(r.inertia, vec![0.0]);
        assert!(kmeans(&Dataset::new(2, vec![]).unwrap(), 1, 10, 0, &mut rng).is_err());
    }
}
