//! Outlier filtering: scaled errors, soft weights, hard rejection and
//! scale estimation.

mod functions;
mod scale;
mod spec;
mod trimmed;

pub use functions::{cost, influence, weight, FilterKind, L1_EPSILON};
pub use scale::{
    bergstrom_scale, compute_scale_mad, ScaleSpec, ScaleState, BERGSTROM_INIT_FACTOR, SCALE_FLOOR,
};
pub use spec::{FilterSpec, BERGSTROM_XI, CAUCHY_BERGSTROM_K};
pub use trimmed::{
    frmsd, hard_weights_trimmed, keep_count, overlap_grid, var_trimmed_weights, OVERLAP_GRID_STEP,
};

use crate::error::{Error, Result};
use crate::matching::MatchSet;

/// Distances divided by the scale `s`.
pub fn scaled_errors(distances: &[f64], s: f64) -> Result<Vec<f64>> {
    if !(s > 0.0) {
        return Err(Error::NonPositiveScale(s));
    }
    Ok(distances.iter().map(|d| d / s).collect())
}

/// Weights for one iteration plus the diagnostics the trace records.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub weights: Vec<f64>,
    pub state: ScaleState,
    /// Overlap picked by the variable trim.
    pub f_star: Option<f64>,
}

/// Resolve the scale for this iteration, then map every match distance to
/// a weight.
///
/// `MaxDistance` thresholds raw distances in meters. The ranking filters
/// work on scaled errors, where the scale cannot change the order.
pub fn apply_filter(spec: &FilterSpec, matches: &MatchSet, state: ScaleState) -> Result<FilterOutcome> {
    if matches.is_empty() {
        return Err(Error::EmptyErrors);
    }
    let distances = matches.distances();
    let state = match spec.scale {
        ScaleSpec::Fixed(s) => ScaleState {
            current_s: s,
            iteration: state.iteration + 1,
        },
        ScaleSpec::Mad => ScaleState {
            current_s: compute_scale_mad(&distances)?,
            iteration: state.iteration + 1,
        },
        ScaleSpec::Bergstrom { sigma_star, xi } => {
            bergstrom_scale(state, &distances, sigma_star, xi)?
        }
    };

    let mut f_star = None;
    let weights = match spec.kind {
        FilterKind::MaxDistance => distances
            .iter()
            .map(|&d| weight(FilterKind::MaxDistance, d, spec.k))
            .collect::<Result<_>>()?,
        FilterKind::Trimmed | FilterKind::Median => {
            let e = scaled_errors(&distances, state.current_s)?;
            let f = if spec.kind == FilterKind::Median { 0.5 } else { spec.f };
            hard_weights_trimmed(&e, f)
        }
        FilterKind::VarTrimmed => {
            let e = scaled_errors(&distances, state.current_s)?;
            let (f, w) = var_trimmed_weights(&e, spec.f_min, spec.f_max, spec.lambda);
            f_star = Some(f);
            w
        }
        kind => scaled_errors(&distances, state.current_s)?
            .into_iter()
            .map(|e| weight(kind, e, spec.k))
            .collect::<Result<_>>()?,
    };
    Ok(FilterOutcome {
        weights,
        state,
        f_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::Match;

    fn matches_from(distances: &[f64]) -> MatchSet {
        MatchSet {
            entries: distances
                .iter()
                .enumerate()
                .map(|(i, &d)| Match {
                    reading: i,
                    reference: i,
                    distance: d,
                })
                .collect(),
            knn: 1,
        }
    }

    #[test]
    fn scaled_error_examples() {
        assert_eq!(scaled_errors(&[1.0, 2.0, 3.0], 1.0).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(scaled_errors(&[1.0, 2.0, 3.0], 2.0).unwrap(), vec![0.5, 1.0, 1.5]);
        assert!(matches!(
            scaled_errors(&[1.0], 0.0),
            Err(Error::NonPositiveScale(_))
        ));
    }

    #[test]
    fn l2_is_all_ones() {
        let m = matches_from(&[0.1, 5.0, 2.0]);
        let state = ScaleState::new(&ScaleSpec::Fixed(1.0));
        let out = apply_filter(&FilterSpec::l2(), &m, state).unwrap();
        assert_eq!(out.weights, vec![1.0; 3]);
        assert_eq!(out.state.current_s, 1.0);
        assert_eq!(out.f_star, None);
    }

    #[test]
    fn fixed_scale_cauchy_uses_raw_distances() {
        let d = [0.01, 0.2, 0.5, 3.0];
        let spec = FilterSpec::soft(FilterKind::Cauchy, 0.2, ScaleSpec::Fixed(1.0));
        let out = apply_filter(&spec, &matches_from(&d), ScaleState::new(&spec.scale)).unwrap();
        for (w, d) in out.weights.iter().zip(d) {
            assert_eq!(*w, weight(FilterKind::Cauchy, d, 0.2).unwrap());
        }
        assert_eq!(out.weights[1], 0.5);
    }

    #[test]
    fn max_distance_is_metric() {
        let spec = FilterSpec::max_distance(0.4);
        let out = apply_filter(
            &spec,
            &matches_from(&[0.1, 0.4, 0.41, 2.0]),
            ScaleState::new(&spec.scale),
        )
        .unwrap();
        assert_eq!(out.weights, vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn median_matches_trimmed_half() {
        let d: Vec<f64> = (0..31).map(|i| ((i * 17) % 13) as f64 * 0.1).collect();
        let m = matches_from(&d);
        let s = ScaleState::new(&ScaleSpec::Fixed(1.0));
        let a = apply_filter(&FilterSpec::median(), &m, s).unwrap();
        let b = apply_filter(&FilterSpec::trimmed(0.5), &m, s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_matches_error() {
        let m = matches_from(&[]);
        assert!(apply_filter(&FilterSpec::l2(), &m, ScaleState::new(&ScaleSpec::Mad)).is_err());
    }
}
