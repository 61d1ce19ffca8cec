//! Shared fixtures for the criterion benchmarks.

use robicp::icp::estimate_attributes;
use robicp::synthetic::{room_pair, SceneSpec};
use robicp::{IcpConfig, PointCloud, RigidTransform};

/// A room pair of `points` points per cloud with normals estimated on the
/// reference and the reading placed at the ground truth.
pub struct Fixture {
    pub reading: PointCloud,
    pub reference: PointCloud,
    pub ground_truth: RigidTransform,
}

pub fn room(points: usize, clutter: f64) -> Fixture {
    let spec = SceneSpec {
        points,
        clutter,
        ..SceneSpec::default()
    };
    let pair = room_pair(&spec, 1).expect("scene");
    let config = IcpConfig::default().without_data_filters();
    Fixture {
        reference: estimate_attributes(&pair.reference, true, &config).expect("normals"),
        reading: pair.reading,
        ground_truth: pair.ground_truth,
    }
}
