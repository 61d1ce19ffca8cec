use nalgebra::{Matrix6, SymmetricEigen, Vector3, Vector6};
use rayon::prelude::*;

use super::RigidTransform;
use crate::error::{Error, Result};
use crate::matching::MatchSet;
use crate::pointcloud::PointCloud;

/// Largest accepted condition number of the 6×6 normal equations.
pub const MAX_CONDITION: f64 = 1e12;
/// Rotation part of a single step is clamped to this norm (radians).
pub const MAX_STEP_ROTATION: f64 = 0.5;

const MIN_MATCHES: usize = 6;
const CHUNK: usize = 2048;

/// Weighted Gauss-Newton system `H x = -b` of the point-to-plane objective
/// linearized at the prior. Unknowns are ordered `(ω, v)`: rotation vector
/// then translation.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    pub hessian: Matrix6<f64>,
    pub rhs: Vector6<f64>,
    /// Matches that contributed (positive weight, usable normal).
    pub used: usize,
}

impl NormalEquations {
    /// Gradient of `Σ w r²` with respect to the twist at zero.
    pub fn gradient(&self) -> Vector6<f64> {
        self.rhs * 2.0
    }
}

fn check_inputs(matches: &MatchSet, weights: &[f64], reference: &PointCloud) -> Result<()> {
    if weights.len() != matches.len() {
        return Err(Error::InvalidArgument(format!(
            "{} weights for {} matches",
            weights.len(),
            matches.len()
        )));
    }
    if reference.normals().is_none() {
        return Err(Error::InvalidArgument(
            "point-to-plane needs reference normals".into(),
        ));
    }
    Ok(())
}

/// Accumulate the normal equations. Partial sums are formed over fixed
/// chunks and added in chunk order, so the result does not depend on the
/// thread count.
pub fn normal_equations(
    matches: &MatchSet,
    weights: &[f64],
    reading: &PointCloud,
    reference: &PointCloud,
    prior: &RigidTransform,
) -> Result<NormalEquations> {
    check_inputs(matches, weights, reference)?;
    let normals = reference.normals().unwrap();
    let partials: Vec<(Matrix6<f64>, Vector6<f64>, usize)> = matches
        .entries
        .par_chunks(CHUNK)
        .zip(weights.par_chunks(CHUNK))
        .map(|(ms, ws)| {
            let mut h = Matrix6::zeros();
            let mut b = Vector6::zeros();
            let mut used = 0;
            for (m, &w) in ms.iter().zip(ws) {
                if !(w > 0.0) || reference.is_degenerate(m.reference) {
                    continue;
                }
                let p = prior.apply(&reading.points()[m.reading]);
                let q = &reference.points()[m.reference];
                let n = &normals[m.reference];
                let r = (p - q).dot(n);
                let mut j = Vector6::zeros();
                j.fixed_rows_mut::<3>(0).copy_from(&p.cross(n));
                j.fixed_rows_mut::<3>(3).copy_from(n);
                h += j * j.transpose() * w;
                b += j * (w * r);
                used += 1;
            }
            (h, b, used)
        })
        .collect();
    let (hessian, rhs, used) = partials.into_iter().fold(
        (Matrix6::zeros(), Vector6::zeros(), 0),
        |(h, b, u), (ph, pb, pu)| (h + ph, b + pb, u + pu),
    );
    Ok(NormalEquations { hessian, rhs, used })
}

/// `Σ w r²` after moving the reading by `exp(twist) ∘ prior`.
pub fn point_to_plane_objective(
    matches: &MatchSet,
    weights: &[f64],
    reading: &PointCloud,
    reference: &PointCloud,
    prior: &RigidTransform,
    twist: &Vector6<f64>,
) -> Result<f64> {
    check_inputs(matches, weights, reference)?;
    let normals = reference.normals().unwrap();
    let omega = Vector3::new(twist[0], twist[1], twist[2]);
    let v = Vector3::new(twist[3], twist[4], twist[5]);
    let t = RigidTransform::exp(&omega, &v).compose(prior);
    Ok(matches
        .entries
        .iter()
        .zip(weights)
        .filter(|(m, w)| **w > 0.0 && !reference.is_degenerate(m.reference))
        .map(|(m, w)| {
            let p = t.apply(&reading.points()[m.reading]);
            let r = (p - reference.points()[m.reference]).dot(&normals[m.reference]);
            w * r * r
        })
        .sum())
}

/// Solve the normal equations for the increment twist, rejecting
/// ill-conditioned systems.
pub fn solve_increment(eq: &NormalEquations) -> Result<Vector6<f64>> {
    if eq.used < MIN_MATCHES {
        return Err(Error::InsufficientMatches { found: eq.used });
    }
    let eig = SymmetricEigen::new(eq.hessian);
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularSystem { condition });
    }
    let chol = eq
        .hessian
        .cholesky()
        .ok_or(Error::SingularSystem { condition })?;
    Ok(chol.solve(&(-eq.rhs)))
}

/// The increment `Δ` of one Gauss-Newton step: the new estimate is
/// `Δ ∘ prior`.
pub fn point_to_plane_increment(
    matches: &MatchSet,
    weights: &[f64],
    reading: &PointCloud,
    reference: &PointCloud,
    prior: &RigidTransform,
) -> Result<RigidTransform> {
    let eq = normal_equations(matches, weights, reading, reference, prior)?;
    let x = solve_increment(&eq)?;
    let mut omega = Vector3::new(x[0], x[1], x[2]);
    let mut v = Vector3::new(x[3], x[4], x[5]);
    let angle = omega.norm();
    if angle > MAX_STEP_ROTATION {
        let s = MAX_STEP_ROTATION / angle;
        omega *= s;
        v *= s;
    }
    Ok(RigidTransform::exp(&omega, &v))
}

/// One weighted point-to-plane Gauss-Newton step from `prior`; returns the
/// updated absolute transform.
pub fn point_to_plane_step(
    matches: &MatchSet,
    weights: &[f64],
    reading: &PointCloud,
    reference: &PointCloud,
    prior: &RigidTransform,
) -> Result<RigidTransform> {
    point_to_plane_increment(matches, weights, reading, reference, prior)
        .map(|delta| delta.compose(prior))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{associate, KdTree, Match};

    /// Three orthogonal 4×4 m faces of a box corner, with exact normals.
    fn corner(step: f64) -> PointCloud {
        let mut pts = Vec::new();
        let mut nrm = Vec::new();
        let n = (4.0 / step) as usize;
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (i as f64 * step + 0.1, j as f64 * step + 0.1);
                pts.push([a, b, 0.0]);
                nrm.push(Vector3::z());
                pts.push([a, 0.0, b]);
                nrm.push(Vector3::y());
                pts.push([0.0, a, b]);
                nrm.push(Vector3::x());
            }
        }
        PointCloud::from_xyz(&pts).unwrap().with_normals(nrm).unwrap()
    }

    fn identity_matches(n: usize, reading: &PointCloud, reference: &PointCloud) -> MatchSet {
        MatchSet {
            entries: (0..n)
                .map(|i| Match {
                    reading: i,
                    reference: i,
                    distance: (reading.points()[i] - reference.points()[i]).norm(),
                })
                .collect(),
            knn: 1,
        }
    }

    #[test]
    fn zero_residual_gives_identity_step() {
        let c = corner(0.5);
        let tree = KdTree::build(&c).unwrap();
        let m = associate(&c, &RigidTransform::identity(), &tree, 1);
        let w = vec![1.0; m.len()];
        let t = point_to_plane_step(&m, &w, &c, &c, &RigidTransform::identity()).unwrap();
        assert!((t.to_matrix() - nalgebra::Matrix4::identity()).amax() < 1e-9);
    }

    #[test]
    fn normal_offset_is_recovered_in_one_step() {
        let reference = corner(0.5);
        let reading = reference.transformed(&RigidTransform::from_translation(Vector3::new(
            0.0, 0.0, 0.3,
        )));
        let m = identity_matches(reference.len(), &reading, &reference);
        let w = vec![1.0; m.len()];
        let t = point_to_plane_step(&m, &w, &reading, &reference, &RigidTransform::identity())
            .unwrap();
        assert!((t.translation().z + 0.3).abs() < 1e-6);
        assert!(t.translation().xy().amax() < 1e-6);
        assert!(t.rotation_angle() < 1e-6);
    }

    #[test]
    fn single_plane_is_singular() {
        let pts: Vec<[f64; 3]> = (0..100)
            .map(|i| [(i % 10) as f64, (i / 10) as f64, 0.0])
            .collect();
        let c = PointCloud::from_xyz(&pts)
            .unwrap()
            .with_normals(vec![Vector3::z(); 100])
            .unwrap();
        let m = identity_matches(100, &c, &c);
        let err = point_to_plane_step(&m, &vec![1.0; 100], &c, &c, &RigidTransform::identity())
            .unwrap_err();
        assert!(matches!(err, Error::SingularSystem { .. }), "{err:?}");
    }

    #[test]
    fn too_few_weighted_matches() {
        let c = corner(1.0);
        let m = identity_matches(c.len(), &c, &c);
        let mut w = vec![0.0; m.len()];
        w[..5].fill(1.0);
        assert!(matches!(
            point_to_plane_step(&m, &w, &c, &c, &RigidTransform::identity()),
            Err(Error::InsufficientMatches { found: 5 })
        ));
    }

    #[test]
    fn missing_normals_and_weight_mismatch() {
        let c = PointCloud::from_xyz(&[[0.0; 3]; 8]).unwrap();
        let m = identity_matches(8, &c, &c);
        assert!(point_to_plane_step(&m, &[1.0; 8], &c, &c, &RigidTransform::identity()).is_err());
        let c = corner(1.0);
        let m = identity_matches(c.len(), &c, &c);
        assert!(point_to_plane_step(&m, &[1.0; 3], &c, &c, &RigidTransform::identity()).is_err());
    }
}
