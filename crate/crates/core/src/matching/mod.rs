//! Data association: exact k-nearest-neighbor matching of reading points
//! against the reference.

mod kdtree;

use rayon::prelude::*;

use crate::minimizer::RigidTransform;
use crate::pointcloud::PointCloud;

pub use kdtree::KdTree;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub reading: usize,
    pub reference: usize,
    /// Euclidean distance between the transformed reading point and the
    /// reference point (meters).
    pub distance: f64,
}

/// All matches of one association pass. Each reading point contributes
/// exactly `knn` consecutive entries, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchSet {
    pub entries: Vec<Match>,
    pub knn: usize,
}

impl MatchSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn distances(&self) -> Vec<f64> {
        self.entries.iter().map(|m| m.distance).collect()
    }
}

const CHUNK: usize = 1024;

/// Match every reading point, moved by `transform`, to its `knn` nearest
/// reference points. `knn` is clamped to the reference size.
pub fn associate(
    reading: &PointCloud,
    transform: &RigidTransform,
    reference: &KdTree,
    knn: usize,
) -> MatchSet {
    assert!(knn >= 1, "knn must be at least 1");
    let k = if knn > reference.len() {
        log::warn!(
            "knn = {knn} exceeds reference size {}; clamping",
            reference.len()
        );
        reference.len()
    } else {
        knn
    };

    let entries = reading
        .points()
        .par_chunks(CHUNK)
        .enumerate()
        .flat_map_iter(|(c, chunk)| {
            let mut best = Vec::with_capacity(k + 1);
            let mut out = Vec::with_capacity(chunk.len() * k);
            for (o, p) in chunk.iter().enumerate() {
                reference.nearest_into(&transform.apply(p), k, &mut best);
                out.extend(best.iter().map(|&(d2, j)| Match {
                    reading: c * CHUNK + o,
                    reference: j as usize,
                    distance: d2.sqrt(),
                }));
            }
            out
        })
        .collect();
    MatchSet { entries, knn: k }
}
