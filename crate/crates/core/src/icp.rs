//! The iteratively reweighted registration loop.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{associate, KdTree};
use crate::minimizer::{
    check_convergence, point_to_plane_increment, ConvergenceSpec, ConvergenceStatus,
    RigidTransform,
};
use crate::pointcloud::{
    estimate_normals_and_density, max_density_filter, random_sample, PointCloud,
};
use crate::robust::{apply_filter, FilterSpec, ScaleState};
use crate::seed::{self, stream};

#[derive(Debug, Clone, PartialEq)]
pub struct IcpConfig {
    /// Matches per reading point.
    pub knn: usize,
    /// Neighborhood size for normal and density estimation.
    pub normals_k: usize,
    /// Density cap in points per cubic meter; infinity disables the filter.
    pub max_density: f64,
    /// Fraction of points kept by random sampling; 1 disables the filter.
    pub keep_ratio: f64,
    pub filter: FilterSpec,
    pub convergence: ConvergenceSpec,
    pub seed: u64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            knn: 3,
            normals_k: 20,
            max_density: 10_000.0,
            keep_ratio: 0.75,
            filter: FilterSpec::l2(),
            convergence: ConvergenceSpec::default(),
            seed: 0,
        }
    }
}

impl IcpConfig {
    /// Same configuration with density capping and random sampling off.
    pub fn without_data_filters(mut self) -> Self {
        self.max_density = f64::INFINITY;
        self.keep_ratio = 1.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.knn == 0 {
            return Err(Error::InvalidArgument("knn must be at least 1".into()));
        }
        if self.normals_k < 3 {
            return Err(Error::InvalidArgument("normals_k must be at least 3".into()));
        }
        if !(self.max_density > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "max_density must be positive, got {}",
                self.max_density
            )));
        }
        if !(self.keep_ratio > 0.0 && self.keep_ratio <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "keep_ratio must be in (0, 1], got {}",
                self.keep_ratio
            )));
        }
        if self.convergence.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        self.filter.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIter,
    /// The minimizer could not produce a step; the result holds the last
    /// valid transform.
    Failed,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIter => "max_iter",
            StopReason::Failed => "failed",
        }
    }
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StopReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(StopReason::Converged),
            "max_iter" => Ok(StopReason::MaxIter),
            "failed" => Ok(StopReason::Failed),
            other => Err(Error::InvalidArgument(format!("unknown stop reason `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationTrace {
    pub iteration: usize,
    /// Scale used to normalize the errors.
    pub scale: f64,
    pub f_star: Option<f64>,
    /// Matches with a positive weight.
    pub n_weighted: usize,
    /// `Σ w·d²` over the matches, with `d` the match distance.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    pub final_transform: RigidTransform,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub trace: Vec<IterationTrace>,
}

/// Write a trace as CSV with header `iteration,s,f_star,n_weighted,objective`.
pub fn write_trace_csv<W: Write>(trace: &[IterationTrace], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iteration", "s", "f_star", "n_weighted", "objective"])?;
    for t in trace {
        w.write_record([
            t.iteration.to_string(),
            t.scale.to_string(),
            t.f_star.map(|f| f.to_string()).unwrap_or_default(),
            t.n_weighted.to_string(),
            t.objective.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Attach the estimated attributes the data filters need: normals when
/// `needs_normals` and the input has none, densities when density capping
/// is enabled. Normals supplied with the input are kept.
pub fn estimate_attributes(
    cloud: &PointCloud,
    needs_normals: bool,
    config: &IcpConfig,
) -> Result<PointCloud> {
    let need_density = config.max_density.is_finite() && cloud.densities().is_none();
    let need_normals = needs_normals && cloud.normals().is_none();
    if !(need_density || need_normals) {
        return Ok(cloud.clone());
    }
    let est = estimate_normals_and_density(cloud, config.normals_k)?;
    match cloud.normals() {
        Some(n) => est.with_normals(n.to_vec()),
        None => Ok(est),
    }
}

/// Run the data-filtering chain: normal and density estimation, density
/// capping, then random sampling. Attributes already present are reused
/// and disabled steps are skipped.
pub fn data_filters(
    cloud: &PointCloud,
    needs_normals: bool,
    config: &IcpConfig,
    rng: &mut seed::Rng,
) -> Result<PointCloud> {
    let mut out = estimate_attributes(cloud, needs_normals, config)?;
    if config.max_density.is_finite() {
        out = max_density_filter(&out, config.max_density, rng)?;
    }
    if config.keep_ratio < 1.0 {
        out = random_sample(&out, config.keep_ratio, rng)?;
    }
    Ok(out)
}

/// Register `reading` against `reference` starting from `t0`.
///
/// Both clouds go through the data filters once, with independent random
/// streams derived from `config.seed`. Each iteration matches the reading
/// under the current estimate, weights the matches, and takes one
/// point-to-plane step. A step that cannot be solved ends the loop with
/// [`StopReason::Failed`] and the last valid transform.
pub fn register(
    reading: &PointCloud,
    reference: &PointCloud,
    t0: &RigidTransform,
    config: &IcpConfig,
) -> Result<RegistrationResult> {
    config.validate()?;
    let mut ref_rng = seed::rng(&[config.seed, stream::REFERENCE_FILTERS]);
    let mut read_rng = seed::rng(&[config.seed, stream::READING_FILTERS]);
    let reference = data_filters(reference, true, config, &mut ref_rng)?;
    let reading = data_filters(reading, false, config, &mut read_rng)?;
    register_filtered(&reading, &reference, t0, config)
}

/// The registration loop on clouds that are already filtered. The
/// reference must carry normals.
pub fn register_filtered(
    reading: &PointCloud,
    reference: &PointCloud,
    t0: &RigidTransform,
    config: &IcpConfig,
) -> Result<RegistrationResult> {
    config.validate()?;
    if reference.normals().is_none() {
        return Err(Error::InvalidArgument(
            "reference needs normals for point-to-plane".into(),
        ));
    }
    let tree = KdTree::build(reference)?;
    let mut current = t0.orthonormalized();
    let mut state = ScaleState::new(&config.filter.scale);
    let mut trace = Vec::new();
    let mut stop_reason = StopReason::MaxIter;

    for iteration in 1..=config.convergence.max_iter {
        let matches = associate(reading, &current, &tree, config.knn);
        let outcome = apply_filter(&config.filter, &matches, state)?;
        state = outcome.state;
        trace.push(IterationTrace {
            iteration,
            scale: state.current_s,
            f_star: outcome.f_star,
            n_weighted: outcome.weights.iter().filter(|w| **w > 0.0).count(),
            objective: matches
                .entries
                .iter()
                .zip(&outcome.weights)
                .map(|(m, w)| w * m.distance * m.distance)
                .sum(),
        });

        let delta = match point_to_plane_increment(
            &matches,
            &outcome.weights,
            reading,
            reference,
            &current,
        ) {
            Ok(d) => d,
            Err(e @ (Error::SingularSystem { .. } | Error::InsufficientMatches { .. })) => {
                log::debug!("iteration {iteration}: {e}");
                stop_reason = StopReason::Failed;
                break;
            }
            Err(e) => return Err(e),
        };
        current = delta.compose(&current).orthonormalized();

        match check_convergence(&delta, &config.convergence, iteration) {
            ConvergenceStatus::Continue => {}
            ConvergenceStatus::ConvergedDifferential => {
                stop_reason = StopReason::Converged;
                break;
            }
            ConvergenceStatus::StoppedMaxIter => {
                stop_reason = StopReason::MaxIter;
                break;
            }
        }
    }

    Ok(RegistrationResult {
        final_transform: current,
        iterations: trace.len(),
        stop_reason,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn defaults_follow_pipeline_table() {
        let c = IcpConfig::default();
        assert_eq!((c.knn, c.normals_k), (3, 20));
        assert_eq!((c.max_density, c.keep_ratio), (10_000.0, 0.75));
        assert_eq!(c.convergence, ConvergenceSpec::default());
    }

    #[test]
    fn self_registration_is_identity() {
        let rects = crate::synthetic::room_surfaces();
        let cloud =
            crate::synthetic::sample_surfaces(&rects, 10_000, 0.0, &mut seed::rng(&[5])).unwrap();
        let config = IcpConfig::default().without_data_filters();
        let r = register(&cloud, &cloud, &RigidTransform::identity(), &config).unwrap();
        assert_eq!(r.stop_reason, StopReason::Converged);
        assert!(r.iterations <= 2);
        assert!(r.final_transform.translation_norm() < 1e-3);
        assert!(r.final_transform.rotation_angle() < 1e-3);
        assert_eq!(r.trace.len(), r.iterations);
    }

    #[test]
    fn single_plane_fails_with_prior() {
        let pts: Vec<[f64; 3]> = (0..400)
            .map(|i| [(i % 20) as f64 * 0.1, (i / 20) as f64 * 0.1, 0.0])
            .collect();
        let cloud = PointCloud::from_xyz(&pts).unwrap();
        let t0 = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 0.05));
        let config = IcpConfig::default().without_data_filters();
        let r = register(&cloud, &cloud, &t0, &config).unwrap();
        assert_eq!(r.stop_reason, StopReason::Failed);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.final_transform, t0.orthonormalized());
    }

    #[test]
    fn trace_csv_layout() {
        let trace = [
            IterationTrace {
                iteration: 1,
                scale: 0.5,
                f_star: Some(0.7),
                n_weighted: 10,
                objective: 2.0,
            },
            IterationTrace {
                iteration: 2,
                scale: 1.0,
                f_star: None,
                n_weighted: 9,
                objective: 1.5,
            },
        ];
        let mut out = Vec::new();
        write_trace_csv(&trace, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "iteration,s,f_star,n_weighted,objective\n1,0.5,0.7,10,2\n2,1,,9,1.5\n"
        );
    }

    #[test]
    fn stop_reason_roundtrip() {
        for r in [StopReason::Converged, StopReason::MaxIter, StopReason::Failed] {
            assert_eq!(r.to_string().parse::<StopReason>().unwrap(), r);
        }
    }
}
