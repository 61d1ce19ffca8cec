//! Point clouds and the data-filtering stage: normal and density
//! estimation, density capping and random subsampling.

mod filters;
mod io;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::minimizer::RigidTransform;

pub use filters::{estimate_normals_and_density, max_density_filter, random_sample};
pub use io::{load_cloud, read_csv, read_ply, save_cloud, write_csv, write_ply, CloudFormat};

pub type Point = Vector3<f64>;

const UNIT_NORM_TOL: f64 = 1e-6;

/// A set of 3D points (meters) with optional unit normals and densities
/// (points per cubic meter), all aligned by index.
///
/// Normals produced by [`estimate_normals_and_density`] may be flagged as
/// degenerate; flagged points are skipped as reference points during
/// minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
    normals: Option<Vec<Vector3<f64>>>,
    densities: Option<Vec<f64>>,
    degenerate: Option<Vec<bool>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        Ok(Self {
            points,
            normals: None,
            densities: None,
            degenerate: None,
        })
    }

    pub fn from_xyz(points: &[[f64; 3]]) -> Result<Self> {
        Self::new(points.iter().map(|p| Vector3::from(*p)).collect())
    }

    pub fn with_normals(mut self, normals: Vec<Vector3<f64>>) -> Result<Self> {
        if normals.len() != self.points.len() {
            return Err(Error::InvalidArgument(format!(
                "{} normals for {} points",
                normals.len(),
                self.points.len()
            )));
        }
        if let Some(i) = normals
            .iter()
            .position(|n| (n.norm() - 1.0).abs() > UNIT_NORM_TOL)
        {
            return Err(Error::InvalidArgument(format!(
                "normal {i} is not unit length (norm {})",
                normals[i].norm()
            )));
        }
        self.normals = Some(normals);
        self.degenerate = None;
        Ok(self)
    }

    pub fn with_densities(mut self, densities: Vec<f64>) -> Result<Self> {
        if densities.len() != self.points.len() {
            return Err(Error::InvalidArgument(format!(
                "{} densities for {} points",
                densities.len(),
                self.points.len()
            )));
        }
        if let Some(i) = densities.iter().position(|d| !(*d > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "density {i} is not positive ({})",
                densities[i]
            )));
        }
        self.densities = Some(densities);
        Ok(self)
    }

    pub(crate) fn set_estimated_normals(&mut self, normals: Vec<Vector3<f64>>, flags: Vec<bool>) {
        debug_assert_eq!(normals.len(), self.points.len());
        self.normals = Some(normals);
        self.degenerate = flags.iter().any(|f| *f).then_some(flags);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[Vector3<f64>]> {
        self.normals.as_deref()
    }

    pub fn densities(&self) -> Option<&[f64]> {
        self.densities.as_deref()
    }

    /// Per-point flags set when the normal came from a degenerate
    /// neighborhood. `None` means no point is flagged.
    pub fn degenerate_flags(&self) -> Option<&[bool]> {
        self.degenerate.as_deref()
    }

    pub fn is_degenerate(&self, i: usize) -> bool {
        self.degenerate.as_ref().is_some_and(|f| f[i])
    }

    pub fn centroid(&self) -> Point {
        self.points.iter().sum::<Point>() / self.points.len() as f64
    }

    /// Keep the points where `keep` is true, carrying every attribute along.
    pub fn retain_mask(&self, keep: &[bool]) -> Result<Self> {
        assert_eq!(keep.len(), self.len(), "mask length mismatch");
        fn pick<T: Copy>(v: &[T], keep: &[bool]) -> Vec<T> {
            v.iter()
                .zip(keep)
                .filter_map(|(x, k)| k.then_some(*x))
                .collect()
        }
        let points = pick(&self.points, keep);
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        Ok(Self {
            points,
            normals: self.normals.as_deref().map(|v| pick(v, keep)),
            densities: self.densities.as_deref().map(|v| pick(v, keep)),
            degenerate: self.degenerate.as_deref().map(|v| pick(v, keep)),
        })
    }

    /// Apply `t` to every point; normals are rotated.
    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| ns.iter().map(|n| t.rotate(n)).collect()),
            densities: self.densities.clone(),
            degenerate: self.degenerate.clone(),
        }
    }

    pub(crate) fn densities_mut(&mut self) -> Option<&mut Vec<f64>> {
        self.densities.as_mut()
    }
}
