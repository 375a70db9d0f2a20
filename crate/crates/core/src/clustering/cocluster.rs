use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{BiclusterAssignment, TopicTypeMatrix};

/// Number of biclusters used when none is configured.
pub fn default_k(rows: usize, cols: usize) -> usize {
    rows.min(cols).min(2 + cols / 3).max(1)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's k-means with k-means++ seeding; the best of `restarts` runs by
/// inertia. Labels are renumbered in order of first appearance.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Result<Vec<usize>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::Clustering(format!("k-means with k={k} on {n} points")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..restarts.max(1) {
        let (inertia, labels) = lloyd(points, k, &mut rng);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    let labels = best.expect("at least one restart").1;
    let mut rename = vec![usize::MAX; k];
    let mut next = 0;
    Ok(labels
        .into_iter()
        .map(|l| {
            if rename[l] == usize::MAX {
                rename[l] = next;
                next += 1;
            }
            rename[l]
        })
        .collect())
}

fn lloyd(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<usize>) {
    let n = points.len();
    let mut centers: Vec<Vec<f64>> = vec![points[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        centers.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }

    let mut labels = vec![0; n];
    for _ in 0..300 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            for c in 1..k {
                if sq_dist(p, &centers[c]) < sq_dist(p, &centers[best]) {
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed an empty cluster at the point farthest from its center.
                let far = (0..n)
                    .max_by(|&x, &y| {
                        sq_dist(&points[x], &centers[labels[x]]).total_cmp(&sq_dist(&points[y], &centers[labels[y]]))
                    })
                    .expect("n > 0");
                centers[c] = points[far].clone();
                labels[far] = c;
                changed = true;
            } else {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum();
    (inertia, labels)
}

/// Spectral co-clustering of a 0/1 matrix into `k` biclusters.
pub fn cocluster(m: &TopicTypeMatrix, k: usize, seed: u64) -> Result<BiclusterAssignment> {
    let (rows, cols) = (m.rows(), m.cols());
    if m.nonzeros() == 0 {
        return Err(Error::Clustering("co-clustering an all-zero matrix".into()));
    }
    if k == 0 || k > rows.min(cols) {
        return Err(Error::Clustering(format!("k={k} outside [1, {}]", rows.min(cols))));
    }
    if k == 1 {
        return Ok(BiclusterAssignment {
            row_labels: vec![0; rows],
            col_labels: vec![0; cols],
            k,
        });
    }

    let dr: Vec<f64> = (0..rows).map(|i| (0..cols).map(|j| m.get(i, j) as f64).sum()).collect();
    let dc: Vec<f64> = (0..cols).map(|j| (0..rows).map(|i| m.get(i, j) as f64).sum()).collect();
    let unit = |d: f64| if d > 0.0 { d } else { 1.0 };
    let mut an = DMatrix::from_fn(rows, cols, |i, j| m.get(i, j) as f64 / (unit(dr[i]) * unit(dc[j])).sqrt());

    // Remove the trivial leading pair (square-root degrees, singular value 1).
    let total: f64 = dr.iter().sum();
    let u1 = dr.iter().map(|d| (d / total).sqrt());
    let v1: Vec<f64> = dc.iter().map(|d| (d / total).sqrt()).collect();
    for (i, ui) in u1.enumerate() {
        for (j, vj) in v1.iter().enumerate() {
            an[(i, j)] -= ui * vj;
        }
    }

    let l = (k as f64).log2().ceil() as usize;
    let svd = an.svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    // A truncated degenerate subspace is an arbitrary rotation, so keep every
    // vector tied with the last one picked.
    let mut take = l.min(order.len());
    if take > 0 {
        let edge = svd.singular_values[order[take - 1]];
        while take < order.len() && (svd.singular_values[order[take]] - edge).abs() <= 1e-9 * edge.max(1.0) {
            take += 1;
        }
    }
    let picked = &order[..take];

    let mut points = Vec::with_capacity(rows + cols);
    for i in 0..rows {
        points.push(picked.iter().map(|&c| u[(i, c)] / unit(dr[i]).sqrt()).collect());
    }
    for j in 0..cols {
        points.push(picked.iter().map(|&c| vt[(c, j)] / unit(dc[j]).sqrt()).collect());
    }
    let labels = kmeans(&points, k, 10, seed)?;
    Ok(BiclusterAssignment {
        row_labels: labels[..rows].to_vec(),
        col_labels: labels[rows..].to_vec(),
        k,
    })
}
