//! Seeded union-of-subspaces fixtures.

use crate::clustering::ClusterLabels;
use crate::error::{Error, Result};
use crate::grassmann::{orthonormalize, GrassmannPoint};
use crate::kernels::principal_angle_cosines;
use crate::rng::GaussianRng;

/// Attempts per center before the separation is declared unreachable.
pub const MAX_REDRAWS: usize = 1000;

/// Outlier seed used by the CLI when none is given: `seed ^ OUTLIER_SEED_XOR`.
pub const OUTLIER_SEED_XOR: u64 = 0xabc;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub clusters: usize,
    pub per_cluster: usize,
    pub d: usize,
    pub p: usize,
    pub noise_sigma: f64,
    /// Smallest allowed principal angle between centers, in degrees.
    pub min_separation: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.clusters == 0 || self.clusters * self.per_cluster < 2 {
            return bad(format!(
                "need at least 2 points, got {} clusters x {}",
                self.clusters, self.per_cluster
            ));
        }
        if self.p == 0 || self.p > self.d {
            return bad(format!(
                "need 1 <= p <= d, got p = {}, d = {}",
                self.p, self.d
            ));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return bad(format!(
                "noise sigma must be >= 0, got {}",
                self.noise_sigma
            ));
        }
        if !(0.0..=90.0).contains(&self.min_separation) {
            return bad(format!(
                "min separation must lie in [0, 90] degrees, got {}",
                self.min_separation
            ));
        }
        if self.min_separation == 90.0 && self.clusters * self.p > self.d {
            return bad(format!(
                "{} mutually orthogonal {}-dim centers do not fit in R^{}",
                self.clusters, self.p, self.d
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.clusters * self.per_cluster
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn smallest_angle_deg(a: &GrassmannPoint, b: &GrassmannPoint) -> Result<f64> {
    let top = principal_angle_cosines(a, b)?.cosines[0];
    Ok(top.acos().to_degrees())
}

/// Cluster centers. At 90° they come from one joint orthonormalization;
/// otherwise each center is redrawn until it clears every earlier one.
pub fn synth_centers(spec: &SynthSpec, rng: &mut GaussianRng) -> Result<Vec<GrassmannPoint>> {
    let (d, p, c) = (spec.d, spec.p, spec.clusters);
    if spec.min_separation == 90.0 {
        let joint = orthonormalize(&rng.matrix(d, c * p), c * p)?.into_basis();
        return (0..c)
            .map(|k| GrassmannPoint::new(joint.columns(k * p, p).into_owned()))
            .collect();
    }
    let mut centers: Vec<GrassmannPoint> = Vec::with_capacity(c);
    for k in 0..c {
        let mut accepted = None;
        for _ in 0..MAX_REDRAWS {
            let cand = orthonormalize(&rng.matrix(d, p), p)?;
            let mut ok = true;
            for prev in &centers {
                if smallest_angle_deg(&cand, prev)? < spec.min_separation {
                    ok = false;
                    break;
                }
            }
            if ok {
                accepted = Some(cand);
                break;
            }
        }
        match accepted {
            Some(cand) => centers.push(cand),
            None => {
                return Err(Error::Infeasible(format!(
                    "center {k} could not reach {}° separation in {MAX_REDRAWS} draws",
                    spec.min_separation
                )))
            }
        }
    }
    Ok(centers)
}

/// Points `orthonormalize(center + σ·G)` listed cluster by cluster, with
/// their cluster of origin as labels.
pub fn synth_union(spec: &SynthSpec) -> Result<(Vec<GrassmannPoint>, ClusterLabels)> {
    spec.validate()?;
    let mut rng = GaussianRng::new(spec.seed);
    let centers = synth_centers(spec, &mut rng)?;
    let mut points = Vec::with_capacity(spec.len());
    let mut labels = Vec::with_capacity(spec.len());
    for (k, center) in centers.iter().enumerate() {
        for _ in 0..spec.per_cluster {
            let noise = rng.matrix(spec.d, spec.p);
            let pt = if spec.noise_sigma == 0.0 {
                center.clone()
            } else {
                orthonormalize(&(center.basis() + noise * spec.noise_sigma), spec.p)?
            };
            points.push(pt);
            labels.push(k);
        }
    }
    let labels = ClusterLabels::new(labels, spec.clusters)?;
    Ok((points, labels))
}

/// Replaces `round(fraction · N)` points, chosen by a seeded shuffle, with
/// uniformly random subspaces. Returns the new set and the sorted replaced
/// indices; labels of the replaced points are left to the caller.
pub fn corrupt_with_outliers(
    points: &[GrassmannPoint],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<GrassmannPoint>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(format!(
            "outlier fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let (d, p) = crate::grassmann::common_shape(points)?;
    let n = points.len();
    let count = (fraction * n as f64).round() as usize;
    let mut rng = GaussianRng::new(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = i + rng.below(n - i);
        idx.swap(i, j);
    }
    let mut chosen = idx[..count].to_vec();
    chosen.sort_unstable();
    let mut out = points.to_vec();
    for &i in &chosen {
        out[i] = orthonormalize(&rng.matrix(d, p), p)?;
    }
    Ok((out, chosen))
}

/// Mean distance between same-cluster and different-cluster pairs.
pub fn distance_statistics(points: &[GrassmannPoint], labels: &[usize]) -> Result<(f64, f64)> {
    let mut within = (0.0, 0usize);
    let mut across = (0.0, 0usize);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dist = crate::grassmann::grassmann_distance(&points[i], &points[j])?;
            let acc = if labels[i] == labels[j] {
                &mut within
            } else {
                &mut across
            };
            acc.0 += dist;
            acc.1 += 1;
        }
    }
    let mean = |(s, n): (f64, usize)| if n > 0 { s / n as f64 } else { f64::NAN };
    Ok((mean(within), mean(across)))
}
