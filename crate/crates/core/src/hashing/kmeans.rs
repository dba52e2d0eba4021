//! Codebook training: k-means++ seeding, Lloyd iterations, and per-cell
//! median thresholds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Codebook;
use crate::error::{Error, Result};
use crate::fingerprint::Descriptor;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

fn nearest(point: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.chunks_exact(dim).enumerate() {
        let d = dist2(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Median of `values` (mean of the middle pair for even counts).
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Trains an `n_c`-centroid codebook over `descriptors`.
///
/// The result depends only on the descriptor values, their order, `n_c`,
/// `max_iters` and `seed`; internal parallelism never changes it.
pub fn train_codebook(
    descriptors: &[Descriptor],
    n_c: usize,
    max_iters: usize,
    seed: u64,
) -> Result<Codebook> {
    if n_c == 0 {
        return Err(Error::invalid("codebook needs at least one centroid"));
    }
    if descriptors.len() < n_c {
        return Err(Error::invalid(format!(
            "{n_c} centroids need at least {n_c} training descriptors, got {}",
            descriptors.len()
        )));
    }
    let dim = descriptors[0].dim();
    if dim == 0 {
        return Err(Error::invalid("descriptors have zero dimensions"));
    }
    let mut data = Vec::with_capacity(descriptors.len() * dim);
    for (i, d) in descriptors.iter().enumerate() {
        if d.dim() != dim {
            return Err(Error::invalid(format!(
                "descriptor {i} has {} dimensions, expected {dim}",
                d.dim()
            )));
        }
        if d.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "descriptor {i} has non-finite values"
            )));
        }
        data.extend_from_slice(&d.values);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_plus_plus(&data, dim, n_c, &mut rng);
    let assignments = lloyd(&data, dim, &mut centroids, max_iters);
    let thresholds = cell_medians(&data, dim, n_c, &assignments);

    Codebook::from_parts(
        dim,
        seed,
        centroids.iter().map(|&v| v as f32).collect(),
        thresholds.iter().map(|&v| v as f32).collect(),
    )
}

fn seed_plus_plus(data: &[f64], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = data.len() / dim;
    let point = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(point(first));
    let mut d2: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| dist2(point(i), point(first)))
        .collect();

    while centroids.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave target just above the final sum
            chosen.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap_or(0))
        } else {
            rng.random_range(0..n)
        };
        let c = point(pick).to_vec();
        d2.par_iter_mut().enumerate().for_each(|(i, d)| {
            *d = d.min(dist2(point(i), &c));
        });
        centroids.extend_from_slice(&c);
    }
    centroids
}

fn assign_all(data: &[f64], dim: usize, centroids: &[f64]) -> Vec<(usize, f64)> {
    data.par_chunks_exact(dim)
        .map(|p| nearest(p, centroids, dim))
        .collect()
}

/// Runs Lloyd iterations until the assignment stops changing or `max_iters`
/// updates have been made. Returns the assignment of every point to the final
/// centroids.
fn lloyd(data: &[f64], dim: usize, centroids: &mut [f64], max_iters: usize) -> Vec<usize> {
    let k = centroids.len() / dim;
    let mut current: Vec<(usize, f64)> = assign_all(data, dim, centroids);
    let mut previous: Option<Vec<usize>> = None;
    for _ in 0..max_iters {
        let labels: Vec<usize> = current.iter().map(|a| a.0).collect();
        if previous.as_ref() == Some(&labels) {
            break;
        }

        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (p, &c) in data.chunks_exact(dim).zip(&labels) {
            counts[c] += 1;
            for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = counts[c] as f64;
                for (dst, s) in centroids[c * dim..(c + 1) * dim]
                    .iter_mut()
                    .zip(&sums[c * dim..(c + 1) * dim])
                {
                    *dst = s / inv;
                }
            }
        }
        repair_empty(data, dim, centroids, &mut counts, &current);

        previous = Some(labels);
        current = assign_all(data, dim, centroids);
    }
    current.into_iter().map(|a| a.0).collect()
}

/// Moves each empty centroid onto the member of the largest cluster that lies
/// farthest from its centre, splitting that cluster on the next assignment.
fn repair_empty(
    data: &[f64],
    dim: usize,
    centroids: &mut [f64],
    counts: &mut [usize],
    assignments: &[(usize, f64)],
) {
    let mut taken = vec![false; assignments.len()];
    for empty in 0..counts.len() {
        if counts[empty] > 0 {
            continue;
        }
        let Some(largest) =
            (0..counts.len()).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
        else {
            return;
        };
        if counts[largest] < 2 {
            return;
        }
        let far = assignments
            .iter()
            .enumerate()
            .filter(|&(i, a)| a.0 == largest && !taken[i])
            .fold(None::<(usize, f64)>, |best, (i, a)| match best {
                Some((_, d)) if d >= a.1 => best,
                _ => Some((i, a.1)),
            });
        if let Some((i, _)) = far {
            taken[i] = true;
            centroids[empty * dim..(empty + 1) * dim]
                .copy_from_slice(&data[i * dim..(i + 1) * dim]);
            counts[largest] -= 1;
            counts[empty] = 1;
        }
    }
}

fn cell_medians(data: &[f64], dim: usize, k: usize, assignments: &[usize]) -> Vec<f64> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in assignments.iter().enumerate() {
        members[c].push(i);
    }
    let global: Vec<f64> = (0..dim)
        .map(|j| {
            let mut col: Vec<f64> = data.chunks_exact(dim).map(|p| p[j]).collect();
            median(&mut col)
        })
        .collect();
    let mut out = Vec::with_capacity(k * dim);
    let mut col = Vec::new();
    for cell in &members {
        if cell.is_empty() {
            out.extend_from_slice(&global);
            continue;
        }
        for j in 0..dim {
            col.clear();
            col.extend(cell.iter().map(|&i| data[i * dim + j]));
            out.push(median(&mut col));
        }
    }
    out
}
