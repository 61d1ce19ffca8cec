use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::Rng;
use rayon::prelude::*;

use super::PointCloud;
use crate::error::{Error, Result};
use crate::matching::KdTree;

/// Radius floor for the k-th neighbor ball; keeps densities finite on
/// duplicated points.
const MIN_BALL_RADIUS: f64 = 1e-6;
/// Neighborhoods whose k-th neighbor lies closer than this are coincident.
const COINCIDENT_RADIUS: f64 = 1e-12;

struct Local {
    normal: Vector3<f64>,
    density: f64,
    degenerate: bool,
}

fn local_fit(cloud: &PointCloud, tree: &KdTree, i: usize, k: usize) -> Local {
    let p = &cloud.points()[i];
    // The query point itself is the first of its k neighbors.
    let nn = tree.nearest(p, k);
    let radius = nn.last().map_or(0.0, |n| n.1);
    let density = k as f64 / (4.0 / 3.0 * PI * radius.max(MIN_BALL_RADIUS).powi(3));

    if radius <= COINCIDENT_RADIUS {
        return Local {
            normal: Vector3::z(),
            density,
            degenerate: true,
        };
    }

    let pts = cloud.points();
    let mean = nn.iter().map(|&(j, _)| pts[j]).sum::<Vector3<f64>>() / nn.len() as f64;
    let cov = nn.iter().fold(Matrix3::zeros(), |acc, &(j, _)| {
        let d = pts[j] - mean;
        acc + d * d.transpose()
    }) / nn.len() as f64;

    let eig = SymmetricEigen::new(cov);
    let smallest = eig.eigenvalues.imin();
    let normal = eig.eigenvectors.column(smallest).normalize();
    Local {
        normal,
        density,
        degenerate: false,
    }
}

/// Fit a plane to the `k` nearest neighbors of every point (the point
/// itself included) and estimate a k-NN ball density.
///
/// Normals point away from the cloud centroid. Points whose neighbors
/// all coincide get the normal `+z` and are flagged degenerate; the call
/// fails only when every point is degenerate.
pub fn estimate_normals_and_density(cloud: &PointCloud, k: usize) -> Result<PointCloud> {
    if k < 3 || cloud.len() <= k {
        return Err(Error::InvalidArgument(format!(
            "normal estimation needs 3 <= k < cloud size (k = {k}, size = {})",
            cloud.len()
        )));
    }
    let tree = KdTree::build(cloud)?;
    let centroid = cloud.centroid();
    let fits: Vec<Local> = (0..cloud.len())
        .into_par_iter()
        .map(|i| local_fit(cloud, &tree, i, k))
        .collect();

    if fits.iter().all(|f| f.degenerate) {
        return Err(Error::DegenerateNeighborhood);
    }

    let mut normals = Vec::with_capacity(fits.len());
    let mut densities = Vec::with_capacity(fits.len());
    let mut flags = Vec::with_capacity(fits.len());
    for (f, p) in fits.into_iter().zip(cloud.points()) {
        let n = if !f.degenerate && f.normal.dot(&(p - centroid)) < 0.0 {
            -f.normal
        } else {
            f.normal
        };
        normals.push(n);
        densities.push(f.density);
        flags.push(f.degenerate);
    }

    let mut out = cloud.clone().with_densities(densities)?;
    out.set_estimated_normals(normals, flags);
    Ok(out)
}

/// Decimate points whose density exceeds `max_density`: each point is kept
/// with probability `min(1, max_density / density)` and surviving
/// densities are capped at `max_density`.
pub fn max_density_filter<R: Rng + ?Sized>(
    cloud: &PointCloud,
    max_density: f64,
    rng: &mut R,
) -> Result<PointCloud> {
    if !(max_density > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "max density must be positive, got {max_density}"
        )));
    }
    let densities = cloud.densities().ok_or(Error::MissingDensities)?;
    let keep: Vec<bool> = densities
        .iter()
        .map(|&d| rng.random::<f64>() < (max_density / d).min(1.0))
        .collect();
    let mut out = cloud.retain_mask(&keep)?;
    if let Some(ds) = out.densities_mut() {
        ds.iter_mut().for_each(|d| *d = d.min(max_density));
    }
    Ok(out)
}

/// Keep each point independently with probability `keep_ratio`.
pub fn random_sample<R: Rng + ?Sized>(
    cloud: &PointCloud,
    keep_ratio: f64,
    rng: &mut R,
) -> Result<PointCloud> {
    if !(keep_ratio > 0.0 && keep_ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "keep ratio must be in (0, 1], got {keep_ratio}"
        )));
    }
    let keep: Vec<bool> = (0..cloud.len())
        .map(|_| rng.random::<f64>() < keep_ratio)
        .collect();
    cloud.retain_mask(&keep)
}
