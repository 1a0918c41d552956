//! Lloyd's k-means with k-means++ seeding that never looks at row indices.
//!
//! Seeding samples by an exponential race whose uniforms are hashed from
//! `(seed, restart, round, row contents)`, Lloyd ties go to the lowest
//! center index, and every floating-point sum runs over the rows in a
//! canonical content order. Permuting the input rows therefore permutes the
//! output labels and changes nothing else.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::mix64;

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub labels: Vec<usize>,
    pub centers: Matrix,
    pub inertia: f64,
    /// Restart that produced the result.
    pub restart: usize,
}

fn row_hash(rows: &Matrix, i: usize) -> u64 {
    let mut h = 0x6a09_e667_f3bc_c909;
    for v in rows.row(i).iter() {
        // `+ 0.0` folds -0.0 into 0.0.
        h = mix64(h ^ (v + 0.0).to_bits());
    }
    h
}

fn cmp_rows(rows: &Matrix, a: usize, b: usize) -> Ordering {
    rows.row(a)
        .iter()
        .zip(rows.row(b).iter())
        .map(|(x, y)| (x + 0.0).total_cmp(&(y + 0.0)))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Row indices sorted by content; identical rows are interchangeable so
/// their relative order never matters.
fn canonical_order(rows: &Matrix) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rows.nrows()).collect();
    order.sort_by(|&a, &b| cmp_rows(rows, a, b));
    order
}

fn sq_dist(rows: &Matrix, i: usize, centers: &Matrix, k: usize) -> f64 {
    rows.row(i)
        .iter()
        .zip(centers.row(k).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Uniform in `(0, 1)` from a hash.
fn open_unit(h: u64) -> f64 {
    ((h >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn seed_centers(rows: &Matrix, k: usize, order: &[usize], seed: u64, restart: usize) -> Matrix {
    let dim = rows.ncols();
    let hashes: Vec<u64> = (0..rows.nrows()).map(|i| row_hash(rows, i)).collect();
    let stream = mix64(mix64(seed) ^ restart as u64);
    let mut centers = Matrix::zeros(k, dim);
    let mut nearest = vec![f64::INFINITY; rows.nrows()];
    for round in 0..k {
        let salt = mix64(stream ^ mix64(round as u64 + 1));
        let any_weight = round == 0 || order.iter().any(|&i| nearest[i] > 0.0);
        // Exponential race: argmin of -ln(u_i)/w_i samples i with probability ∝ w_i.
        let mut best: Option<(f64, usize)> = None;
        for &i in order {
            let w = if round == 0 || !any_weight {
                1.0
            } else {
                nearest[i]
            };
            if w <= 0.0 {
                continue;
            }
            let key = -open_unit(mix64(salt ^ hashes[i])).ln() / w;
            if best.is_none_or(|(b, _)| key < b) {
                best = Some((key, i));
            }
        }
        let pick = best.map(|(_, i)| i).unwrap_or(order[0]);
        centers.row_mut(round).copy_from(&rows.row(pick));
        for &i in order {
            nearest[i] = nearest[i].min(sq_dist(rows, i, &centers, round));
        }
    }
    centers
}

fn assign(rows: &Matrix, centers: &Matrix, labels: &mut [usize], dists: &mut [f64]) {
    for i in 0..rows.nrows() {
        let mut best = (f64::INFINITY, 0);
        for k in 0..centers.nrows() {
            let d = sq_dist(rows, i, centers, k);
            if d < best.0 {
                best = (d, k);
            }
        }
        dists[i] = best.0;
        labels[i] = best.1;
    }
}

/// Gives each empty cluster the point farthest from its own center, taken
/// from a cluster that can spare it.
fn repair_empty(
    rows: &Matrix,
    centers: &mut Matrix,
    order: &[usize],
    labels: &mut [usize],
    dists: &mut [f64],
) {
    let k = centers.nrows();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let mut pick: Option<usize> = None;
        for &i in order {
            if sizes[labels[i]] > 1 && pick.is_none_or(|p| dists[i] > dists[p]) {
                pick = Some(i);
            }
        }
        let Some(i) = pick else { break };
        sizes[labels[i]] -= 1;
        sizes[c] += 1;
        labels[i] = c;
        dists[i] = 0.0;
        centers.row_mut(c).copy_from(&rows.row(i));
    }
}

fn update_centers(rows: &Matrix, centers: &mut Matrix, order: &[usize], labels: &[usize]) {
    let k = centers.nrows();
    let mut sums = Matrix::zeros(k, rows.ncols());
    let mut counts = vec![0usize; k];
    for &i in order {
        let mut s = sums.row_mut(labels[i]);
        s += rows.row(i);
        counts[labels[i]] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            centers
                .row_mut(c)
                .copy_from(&(sums.row(c) / counts[c] as f64));
        }
    }
}

fn lloyd(
    rows: &Matrix,
    mut centers: Matrix,
    order: &[usize],
    max_iters: usize,
) -> (Vec<usize>, Matrix, f64) {
    let n = rows.nrows();
    let mut labels = vec![usize::MAX; n];
    let mut next = vec![0usize; n];
    let mut dists = vec![0.0; n];
    for _ in 0..max_iters.max(1) {
        assign(rows, &centers, &mut next, &mut dists);
        repair_empty(rows, &mut centers, order, &mut next, &mut dists);
        if next == labels {
            break;
        }
        labels.clone_from(&next);
        update_centers(rows, &mut centers, order, &labels);
    }
    let inertia = order
        .iter()
        .map(|&i| sq_dist(rows, i, &centers, labels[i]))
        .sum();
    (labels, centers, inertia)
}

/// Best of `restarts` k-means runs by inertia, ties going to the earlier
/// restart.
pub fn kmeans(
    rows: &Matrix,
    k: usize,
    restarts: usize,
    max_iters: usize,
    seed: u64,
) -> Result<KmeansResult> {
    let n = rows.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!(
            "k-means needs 1 <= C <= N, got C = {k}, N = {n}"
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidConfig(
            "k-means needs at least one restart".into(),
        ));
    }
    if rows.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "k-means input has non-finite entries".into(),
        ));
    }
    let order = canonical_order(rows);
    let mut best: Option<KmeansResult> = None;
    for restart in 0..restarts {
        let centers = seed_centers(rows, k, &order, seed, restart);
        let (labels, centers, inertia) = lloyd(rows, centers, &order, max_iters);
        if best.as_ref().is_none_or(|b| inertia < b.inertia) {
            best = Some(KmeansResult {
                labels,
                centers,
                inertia,
                restart,
            });
        }
    }
    Ok(best.expect("restarts >= 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::GaussianRng;

    fn inertia_of(rows: &Matrix, labels: &[usize], k: usize) -> f64 {
        let mut total = 0.0;
        for c in 0..k {
            let members: Vec<usize> = (0..rows.nrows()).filter(|&i| labels[i] == c).collect();
            if members.is_empty() {
                continue;
            }
            let mut mean = vec![0.0; rows.ncols()];
            for &i in &members {
                for (j, m) in mean.iter_mut().enumerate() {
                    *m += rows[(i, j)] / members.len() as f64;
                }
            }
            for &i in &members {
                for (j, m) in mean.iter().enumerate() {
                    total += (rows[(i, j)] - m).powi(2);
                }
            }
        }
        total
    }

    #[test]
    fn separated_groups() {
        let mut rng = GaussianRng::new(1);
        let rows = Matrix::from_fn(
            20,
            2,
            |i, _| if i < 10 { 0.0 } else { 10.0 } + 0.1 * rng.normal(),
        );
        let res = kmeans(&rows, 2, 5, 100, 3).unwrap();
        assert!(res.labels[..10].iter().all(|&l| l == res.labels[0]));
        assert!(res.labels[10..].iter().all(|&l| l == res.labels[10]));
        assert_ne!(res.labels[0], res.labels[10]);
    }

    #[test]
    fn one_point_per_cluster() {
        let mut rng = GaussianRng::new(2);
        let rows = rng.matrix(6, 3);
        let res = kmeans(&rows, 6, 3, 50, 0).unwrap();
        let mut seen = res.labels.clone();
        seen.sort();
        assert_eq!(seen, (0..6).collect::<Vec<_>>());
        assert_eq!(res.inertia, 0.0);
    }

    #[test]
    fn beats_random_assignments() {
        let mut rng = GaussianRng::new(3);
        let rows = rng.matrix(20, 2);
        let res = kmeans(&rows, 3, 20, 300, 11).unwrap();
        assert!((inertia_of(&rows, &res.labels, 3) - res.inertia).abs() < 1e-9);
        for _ in 0..1000 {
            let labels: Vec<usize> = (0..20).map(|_| rng.below(3)).collect();
            assert!(res.inertia <= inertia_of(&rows, &labels, 3) + 1e-12);
        }
    }

    #[test]
    fn identical_points_split_deterministically() {
        let rows = Matrix::from_element(7, 2, 0.25);
        let a = kmeans(&rows, 3, 4, 10, 5).unwrap();
        let b = kmeans(&rows, 3, 4, 10, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.inertia, 0.0);
        for c in 0..3 {
            assert!(a.labels.contains(&c));
        }
    }

    #[test]
    fn permutation_equivariant() {
        let mut rng = GaussianRng::new(4);
        let rows = rng.matrix(15, 3);
        let perm: Vec<usize> = (0..15).map(|i| (i * 7 + 3) % 15).collect();
        let permuted = Matrix::from_fn(15, 3, |i, j| rows[(perm[i], j)]);
        let a = kmeans(&rows, 4, 6, 300, 9).unwrap();
        let b = kmeans(&permuted, 4, 6, 300, 9).unwrap();
        for i in 0..15 {
            assert_eq!(b.labels[i], a.labels[perm[i]]);
        }
        assert_eq!(a.inertia, b.inertia);
        assert_eq!(a.centers, b.centers);
    }

    #[test]
    fn rejects_bad_arguments() {
        let rows = Matrix::zeros(3, 2);
        assert!(kmeans(&rows, 4, 1, 10, 0).is_err());
        assert!(kmeans(&rows, 0, 1, 10, 0).is_err());
        assert!(kmeans(&rows, 2, 0, 10, 0).is_err());
    }
}
