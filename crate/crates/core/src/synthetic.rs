//! Synthetic multi-plane scenes for tests, benchmarks and demos.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Normal, UnitSphere};

use crate::error::Result;
use crate::minimizer::RigidTransform;
use crate::pointcloud::PointCloud;
use crate::seed;

/// A planar rectangle `origin + a·u + b·v` for `a, b ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub origin: Vector3<f64>,
    pub u: Vector3<f64>,
    pub v: Vector3<f64>,
}

impl Rect {
    pub fn new(origin: [f64; 3], u: [f64; 3], v: [f64; 3]) -> Self {
        Self {
            origin: origin.into(),
            u: u.into(),
            v: v.into(),
        }
    }

    pub fn area(&self) -> f64 {
        self.u.cross(&self.v).norm()
    }

    pub fn normal(&self) -> Vector3<f64> {
        self.u.cross(&self.v).normalize()
    }
}

/// The five visible faces of an axis-aligned box resting on `z = base.z`.
fn block(base: [f64; 3], size: [f64; 3]) -> Vec<Rect> {
    let [x, y, z] = base;
    let [dx, dy, dz] = size;
    vec![
        Rect::new([x, y, z + dz], [dx, 0.0, 0.0], [0.0, dy, 0.0]),
        Rect::new([x, y, z], [dx, 0.0, 0.0], [0.0, 0.0, dz]),
        Rect::new([x, y + dy, z], [dx, 0.0, 0.0], [0.0, 0.0, dz]),
        Rect::new([x, y, z], [0.0, dy, 0.0], [0.0, 0.0, dz]),
        Rect::new([x + dx, y, z], [0.0, dy, 0.0], [0.0, 0.0, dz]),
    ]
}

/// An open-top 8 × 6 × 3 m room centered on the origin, furnished with
/// three boxes of different sizes and a slanted panel so that no
/// reflection or translation along a wall maps the scene onto itself.
pub fn room_surfaces() -> Vec<Rect> {
    let floor = -1.5;
    let mut rects = vec![
        Rect::new([-4.0, -3.0, floor], [8.0, 0.0, 0.0], [0.0, 6.0, 0.0]),
        Rect::new([-4.0, -3.0, floor], [8.0, 0.0, 0.0], [0.0, 0.0, 3.0]),
        Rect::new([-4.0, 3.0, floor], [8.0, 0.0, 0.0], [0.0, 0.0, 3.0]),
        Rect::new([-4.0, -3.0, floor], [0.0, 6.0, 0.0], [0.0, 0.0, 3.0]),
        Rect::new([4.0, -3.0, floor], [0.0, 6.0, 0.0], [0.0, 0.0, 2.2]),
        Rect::new([1.5, 1.0, floor], [1.6, 0.0, 0.0], [-0.6, 1.2, 1.4]),
    ];
    rects.extend(block([-2.8, -2.2, floor], [1.2, 2.0, 0.9]));
    rects.extend(block([0.4, -2.5, floor], [0.6, 0.6, 1.7]));
    rects.extend(block([2.2, -1.0, floor], [1.0, 0.5, 0.45]));
    rects
}

/// Sample `n` points uniformly by area over `rects`, with isotropic
/// Gaussian noise of standard deviation `noise` meters.
pub fn sample_surfaces<R: Rng + ?Sized>(
    rects: &[Rect],
    n: usize,
    noise: f64,
    rng: &mut R,
) -> Result<PointCloud> {
    let areas: Vec<f64> = rects.iter().map(Rect::area).collect();
    let total: f64 = areas.iter().sum();
    let jitter = Normal::new(0.0, noise.max(0.0)).expect("finite noise");
    let points = (0..n)
        .map(|_| {
            let mut pick = rng.random::<f64>() * total;
            let mut idx = rects.len() - 1;
            for (i, a) in areas.iter().enumerate() {
                if pick < *a {
                    idx = i;
                    break;
                }
                pick -= a;
            }
            let r = &rects[idx];
            let p = r.origin + r.u * rng.random::<f64>() + r.v * rng.random::<f64>();
            if noise > 0.0 {
                p + Vector3::from_fn(|_, _| jitter.sample(rng))
            } else {
                p
            }
        })
        .collect();
    PointCloud::new(points)
}

/// Replace a `fraction` of the points, chosen at random, with points drawn
/// uniformly in the cloud's axis-aligned bounding box. Attributes other
/// than positions are dropped.
pub fn with_clutter<R: Rng + ?Sized>(
    cloud: &PointCloud,
    fraction: f64,
    rng: &mut R,
) -> Result<PointCloud> {
    let pts = cloud.points();
    let (lo, hi) = pts.iter().fold(
        (Vector3::repeat(f64::INFINITY), Vector3::repeat(f64::NEG_INFINITY)),
        |(lo, hi), p| (lo.inf(p), hi.sup(p)),
    );
    let n_clutter = ((fraction.clamp(0.0, 1.0)) * pts.len() as f64).round() as usize;
    let chosen = rand::seq::index::sample(rng, pts.len(), n_clutter);
    let mut out = pts.to_vec();
    for i in chosen.iter() {
        out[i] = Vector3::from_fn(|d, _| lo[d] + rng.random::<f64>() * (hi[d] - lo[d]));
    }
    PointCloud::new(out)
}

/// A transform with the given translation norm and rotation angle about
/// uniformly random directions.
pub fn random_offset<R: Rng + ?Sized>(translation: f64, angle: f64, rng: &mut R) -> RigidTransform {
    let axis: [f64; 3] = UnitSphere.sample(rng);
    let dir: [f64; 3] = UnitSphere.sample(rng);
    RigidTransform::from_axis_angle(
        &Vector3::from(axis),
        angle,
        Vector3::from(dir) * translation,
    )
}

/// Parameters of a synthetic registration problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    /// Points per cloud.
    pub points: usize,
    /// Sensor noise, meters.
    pub noise: f64,
    /// Fraction of reading points replaced by clutter.
    pub clutter: f64,
    /// Norm of the ground-truth translation, meters.
    pub gt_translation: f64,
    /// Ground-truth rotation angle, radians.
    pub gt_angle: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            points: 10_000,
            noise: 0.0,
            clutter: 0.0,
            gt_translation: 0.4,
            gt_angle: 10f64.to_radians(),
        }
    }
}

/// Reading, reference and the ground truth mapping reading into the
/// reference frame.
#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub reading: PointCloud,
    pub reference: PointCloud,
    pub ground_truth: RigidTransform,
}

/// Sample the room twice independently, move the reading by the inverse
/// of a random ground truth, then add clutter to the reading.
pub fn room_pair(spec: &SceneSpec, seed: u64) -> Result<SyntheticPair> {
    let rects = room_surfaces();
    let mut rng = seed::rng(&[seed, 0x5343_454e]);
    let ground_truth = random_offset(spec.gt_translation, spec.gt_angle, &mut rng);
    let reference = sample_surfaces(&rects, spec.points, spec.noise, &mut rng)?;
    let reading = sample_surfaces(&rects, spec.points, spec.noise, &mut rng)?
        .transformed(&ground_truth.inverse());
    let reading = if spec.clutter > 0.0 {
        with_clutter(&reading, spec.clutter, &mut rng)?
    } else {
        reading
    };
    Ok(SyntheticPair {
        reading,
        reference,
        ground_truth,
    })
}
