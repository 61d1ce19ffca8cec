use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};

use crate::minimizer::RigidTransform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    /// Radius of the translation ball, meters.
    pub max_translation: f64,
    /// Largest rotation angle, radians.
    pub max_angle: f64,
    /// Perturbations per benchmark cell.
    pub count: usize,
    pub seed: u64,
}

impl Default for PerturbationSpec {
    /// 1 m, 25°, 128 perturbations.
    fn default() -> Self {
        Self {
            max_translation: 1.0,
            max_angle: 25f64.to_radians(),
            count: 128,
            seed: 0,
        }
    }
}

/// Translation uniform over the solid ball of radius `max_translation`;
/// rotation by an angle uniform on `[0, max_angle]` about a uniformly
/// distributed axis.
pub fn sample_perturbation<R: Rng + ?Sized>(spec: &PerturbationSpec, rng: &mut R) -> RigidTransform {
    let dir: [f64; 3] = UnitSphere.sample(rng);
    let radius = spec.max_translation * rng.random::<f64>().cbrt();
    let axis: [f64; 3] = UnitSphere.sample(rng);
    let angle = spec.max_angle * rng.random::<f64>();
    RigidTransform::from_axis_angle(&Vector3::from(axis), angle, Vector3::from(dir) * radius)
}

/// Translation norm and rotation angle of `T_gt⁻¹ · T_final`.
pub fn transform_error(gt: &RigidTransform, estimate: &RigidTransform) -> (f64, f64) {
    let delta = gt.inverse().compose(estimate);
    (delta.translation_norm(), delta.rotation_angle())
}
