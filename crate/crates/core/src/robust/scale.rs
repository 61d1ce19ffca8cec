use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stats;

/// Lower bound on any estimated scale, meters.
pub const SCALE_FLOOR: f64 = 1e-9;

/// Initial Bergström scale as a multiple of the median error.
pub const BERGSTROM_INIT_FACTOR: f64 = 1.9;

/// How the error scale `s` is obtained at each iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleSpec {
    Fixed(f64),
    /// Median absolute deviation of the match distances, every iteration.
    Mad,
    /// Start at `1.9 · median` and decay geometrically towards `sigma_star`
    /// with rate `xi`.
    Bergstrom { sigma_star: f64, xi: f64 },
}

impl Default for ScaleSpec {
    fn default() -> Self {
        ScaleSpec::Fixed(1.0)
    }
}

impl ScaleSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScaleSpec::Fixed(s) => s > 0.0 && s.is_finite(),
            ScaleSpec::Mad => true,
            ScaleSpec::Bergstrom { sigma_star, xi } => {
                sigma_star > 0.0 && sigma_star.is_finite() && xi > 0.0 && xi < 1.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid scale `{self}`")))
        }
    }
}

impl fmt::Display for ScaleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleSpec::Fixed(s) => write!(f, "fixed:{s}"),
            ScaleSpec::Mad => f.write_str("mad"),
            ScaleSpec::Bergstrom { sigma_star, xi } => write!(f, "berg:{sigma_star}:{xi}"),
        }
    }
}

impl FromStr for ScaleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidArgument(format!("scale `{s}`: {reason}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let spec = match parts.as_slice() {
            ["mad"] => ScaleSpec::Mad,
            ["fixed", v] => ScaleSpec::Fixed(num(v)?),
            ["berg", sigma, xi] => ScaleSpec::Bergstrom {
                sigma_star: num(sigma)?,
                xi: num(xi)?,
            },
            _ => return Err(bad("expected fixed:<s>, mad or berg:<sigma>:<xi>")),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Scale carried from one iteration to the next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleState {
    pub current_s: f64,
    /// Number of times the scale has been updated.
    pub iteration: usize,
}

impl ScaleState {
    pub fn new(spec: &ScaleSpec) -> Self {
        let current_s = match spec {
            ScaleSpec::Fixed(s) => *s,
            _ => 1.0,
        };
        Self {
            current_s,
            iteration: 0,
        }
    }
}

/// `median(|e − median(e)|)` of unscaled distances, floored at
/// [`SCALE_FLOOR`]. No Gaussian consistency factor is applied.
pub fn compute_scale_mad(errors: &[f64]) -> Result<f64> {
    let mad = stats::mad(errors).ok_or(Error::EmptyErrors)?;
    Ok(mad.max(SCALE_FLOOR))
}

/// Advance the Bergström schedule by one iteration.
pub fn bergstrom_scale(
    state: ScaleState,
    errors: &[f64],
    sigma_star: f64,
    xi: f64,
) -> Result<ScaleState> {
    let s = if state.iteration == 0 {
        let med = stats::median(errors).ok_or(Error::EmptyErrors)?;
        (BERGSTROM_INIT_FACTOR * med).max(sigma_star)
    } else {
        sigma_star + xi * (state.current_s - sigma_star)
    };
    Ok(ScaleState {
        current_s: s.max(SCALE_FLOOR),
        iteration: state.iteration + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mad_examples() {
        assert_eq!(compute_scale_mad(&[1.0, 1.0, 1.0]).unwrap(), SCALE_FLOOR);
        assert_eq!(compute_scale_mad(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), 1.0);
        assert_eq!(compute_scale_mad(&[0.5]).unwrap(), SCALE_FLOOR);
        assert!(matches!(compute_scale_mad(&[]), Err(Error::EmptyErrors)));
    }

    #[test]
    fn bergstrom_recurrence() {
        let errors = [0.5, 1.0, 3.0];
        let s0 = bergstrom_scale(ScaleState::new(&ScaleSpec::Mad), &errors, 0.1, 0.85).unwrap();
        assert!((s0.current_s - 1.9).abs() < 1e-15);
        let s1 = bergstrom_scale(s0, &errors, 0.1, 0.85).unwrap();
        assert!((s1.current_s - 1.63).abs() < 1e-12);
        assert_eq!(s1.iteration, 2);

        let mut s = s1;
        for _ in 0..500 {
            let next = bergstrom_scale(s, &errors, 0.1, 0.85).unwrap();
            assert!(next.current_s <= s.current_s);
            s = next;
        }
        assert!((s.current_s - 0.1).abs() < 1e-12);
    }

    #[test]
    fn bergstrom_fixed_point_and_clamp() {
        let at = ScaleState {
            current_s: 0.2,
            iteration: 3,
        };
        assert_eq!(bergstrom_scale(at, &[5.0], 0.2, 0.85).unwrap().current_s, 0.2);
        let s0 = bergstrom_scale(ScaleState::new(&ScaleSpec::Mad), &[0.01], 1.0, 0.5).unwrap();
        assert_eq!(s0.current_s, 1.0);
        assert_eq!(bergstrom_scale(s0, &[0.01], 1.0, 0.5).unwrap().current_s, 1.0);
        assert!(matches!(
            bergstrom_scale(ScaleState::new(&ScaleSpec::Mad), &[], 1.0, 0.5),
            Err(Error::EmptyErrors)
        ));
    }

    #[test]
    fn scale_grammar() {
        assert_eq!("mad".parse::<ScaleSpec>().unwrap(), ScaleSpec::Mad);
        assert_eq!("fixed:1".parse::<ScaleSpec>().unwrap(), ScaleSpec::Fixed(1.0));
        assert_eq!(
            "berg:0.01:0.85".parse::<ScaleSpec>().unwrap(),
            ScaleSpec::Bergstrom {
                sigma_star: 0.01,
                xi: 0.85
            }
        );
        for bad in ["fixed:0", "fixed", "berg:0.1:1.0", "berg:-1:0.5", "bogus"] {
            assert!(bad.parse::<ScaleSpec>().is_err(), "{bad}");
        }
        let s = ScaleSpec::Bergstrom {
            sigma_star: 0.25,
            xi: 0.85,
        };
        assert_eq!(s.to_string().parse::<ScaleSpec>().unwrap(), s);
    }
}
