//! Rigid-transform algebra, the weighted point-to-plane minimization step
//! and the differential/counter convergence test.

mod point_to_plane;
mod transform;

pub use point_to_plane::{
    normal_equations, point_to_plane_increment, point_to_plane_objective, point_to_plane_step,
    solve_increment, NormalEquations, MAX_CONDITION, MAX_STEP_ROTATION,
};
pub use transform::{rotation_angle, RigidTransform};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceSpec {
    /// Translation threshold on the increment, meters.
    pub trans_eps: f64,
    /// Rotation threshold on the increment, radians.
    pub rot_eps: f64,
    pub max_iter: usize,
}

impl Default for ConvergenceSpec {
    /// 1 mm, 1 mrad, 40 iterations.
    fn default() -> Self {
        Self {
            trans_eps: 1e-3,
            rot_eps: 1e-3,
            max_iter: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceStatus {
    Continue,
    ConvergedDifferential,
    StoppedMaxIter,
}

/// Differential check on the last increment, then the iteration counter.
pub fn check_convergence(
    delta: &RigidTransform,
    spec: &ConvergenceSpec,
    iter: usize,
) -> ConvergenceStatus {
    if delta.translation_norm() < spec.trans_eps && delta.rotation_angle() < spec.rot_eps {
        ConvergenceStatus::ConvergedDifferential
    } else if iter >= spec.max_iter {
        ConvergenceStatus::StoppedMaxIter
    } else {
        ConvergenceStatus::Continue
    }
}
