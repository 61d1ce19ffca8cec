//! Pointwise cost, influence and weight functions of the soft filters.
//!
//! Every function takes the scaled error `e` (any sign; only `|e|` matters)
//! and the tuning parameter `k`. Costs are normalized so that
//! `ρ(e) ≈ e²/2` near zero, which makes `w(e) · e = ψ(e) = ρ'(e)` hold
//! exactly for every kind that has a cost.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Floor on `|e|` in the L1 weight, which is singular at zero.
pub const L1_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterKind {
    L2,
    L1,
    Huber,
    Cauchy,
    GM,
    SC,
    Welsch,
    Tukey,
    Student,
    MaxDistance,
    Trimmed,
    Median,
    VarTrimmed,
}

impl FilterKind {
    pub const ALL: [FilterKind; 13] = [
        FilterKind::L2,
        FilterKind::L1,
        FilterKind::Huber,
        FilterKind::Cauchy,
        FilterKind::GM,
        FilterKind::SC,
        FilterKind::Welsch,
        FilterKind::Tukey,
        FilterKind::Student,
        FilterKind::MaxDistance,
        FilterKind::Trimmed,
        FilterKind::Median,
        FilterKind::VarTrimmed,
    ];

    /// M-estimators with a tuning parameter `k`.
    pub const M_ESTIMATORS: [FilterKind; 6] = [
        FilterKind::Huber,
        FilterKind::Cauchy,
        FilterKind::GM,
        FilterKind::SC,
        FilterKind::Welsch,
        FilterKind::Tukey,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::L2 => "l2",
            FilterKind::L1 => "l1",
            FilterKind::Huber => "huber",
            FilterKind::Cauchy => "cauchy",
            FilterKind::GM => "gm",
            FilterKind::SC => "sc",
            FilterKind::Welsch => "welsch",
            FilterKind::Tukey => "tukey",
            FilterKind::Student => "student",
            FilterKind::MaxDistance => "maxdist",
            FilterKind::Trimmed => "trimmed",
            FilterKind::Median => "median",
            FilterKind::VarTrimmed => "vartrimmed",
        }
    }

    /// Weight is a pointwise function of the scaled error.
    pub fn is_pointwise(self) -> bool {
        !self.is_ranking()
    }

    /// Weight depends on the rank of the error among all matches.
    pub fn is_ranking(self) -> bool {
        matches!(
            self,
            FilterKind::Trimmed | FilterKind::Median | FilterKind::VarTrimmed
        )
    }

    pub fn has_cost(self) -> bool {
        self.is_pointwise() && self != FilterKind::Student
    }

    /// Uses the tuning parameter `k`.
    pub fn uses_k(self) -> bool {
        !matches!(
            self,
            FilterKind::L2
                | FilterKind::L1
                | FilterKind::Trimmed
                | FilterKind::Median
                | FilterKind::VarTrimmed
        )
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        FilterKind::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or_else(|| Error::InvalidFilterSpec {
                spec: s.to_string(),
                reason: format!("unknown filter kind `{s}`"),
            })
    }
}

fn ranking_error(kind: FilterKind) -> Error {
    Error::InvalidArgument(format!(
        "`{kind}` weights depend on the whole error set; use the trimming functions"
    ))
}

/// IRLS weight `w(e)`.
pub fn weight(kind: FilterKind, e: f64, k: f64) -> Result<f64> {
    let a = e.abs();
    let e2 = e * e;
    Ok(match kind {
        FilterKind::L2 => 1.0,
        FilterKind::L1 => 1.0 / a.max(L1_EPSILON),
        FilterKind::Huber => {
            if a <= k {
                1.0
            } else {
                k / a
            }
        }
        FilterKind::Cauchy => 1.0 / (1.0 + (e / k).powi(2)),
        FilterKind::GM => k * k / (k + e2).powi(2),
        FilterKind::SC => {
            if e2 <= k {
                1.0
            } else {
                4.0 * k * k / (k + e2).powi(2)
            }
        }
        FilterKind::Welsch => (-(e / k).powi(2)).exp(),
        FilterKind::Tukey => {
            if a <= k {
                (1.0 - (e / k).powi(2)).powi(2)
            } else {
                0.0
            }
        }
        FilterKind::Student => {
            (k + 3.0) * (1.0 + e2 / k).powf(-(k + 3.0) / 2.0) / (k + e2)
        }
        FilterKind::MaxDistance => {
            if a <= k {
                1.0
            } else {
                0.0
            }
        }
        FilterKind::Trimmed | FilterKind::Median | FilterKind::VarTrimmed => {
            return Err(ranking_error(kind))
        }
    })
}

/// Cost `ρ(e)`. Diagnostic only; the registration loop uses weights.
pub fn cost(kind: FilterKind, e: f64, k: f64) -> Result<f64> {
    let a = e.abs();
    let e2 = e * e;
    Ok(match kind {
        FilterKind::L2 => e2 / 2.0,
        FilterKind::L1 => a,
        FilterKind::Huber => {
            if a <= k {
                e2 / 2.0
            } else {
                k * (a - k / 2.0)
            }
        }
        FilterKind::Cauchy => k * k / 2.0 * (e / k).powi(2).ln_1p(),
        FilterKind::GM => k * e2 / (2.0 * (k + e2)),
        FilterKind::SC => {
            if e2 <= k {
                e2 / 2.0
            } else {
                2.0 * k * e2 / (k + e2) - k / 2.0
            }
        }
        FilterKind::Welsch => -k * k / 2.0 * (-(e / k).powi(2)).exp_m1(),
        FilterKind::Tukey => {
            if a <= k {
                k * k / 6.0 * (1.0 - (1.0 - (e / k).powi(2)).powi(3))
            } else {
                k * k / 6.0
            }
        }
        FilterKind::MaxDistance => {
            if a <= k {
                e2 / 2.0
            } else {
                k * k / 2.0
            }
        }
        FilterKind::Student
        | FilterKind::Trimmed
        | FilterKind::Median
        | FilterKind::VarTrimmed => return Err(Error::UndefinedCost(kind)),
    })
}

/// Influence `ψ(e) = ρ'(e)`, analytic.
pub fn influence(kind: FilterKind, e: f64, k: f64) -> Result<f64> {
    let a = e.abs();
    let e2 = e * e;
    Ok(match kind {
        FilterKind::L2 => e,
        FilterKind::L1 => e.signum(),
        FilterKind::Huber => {
            if a <= k {
                e
            } else {
                k * e.signum()
            }
        }
        FilterKind::Cauchy => e / (1.0 + (e / k).powi(2)),
        FilterKind::GM => k * k * e / (k + e2).powi(2),
        FilterKind::SC => {
            if e2 <= k {
                e
            } else {
                4.0 * k * k * e / (k + e2).powi(2)
            }
        }
        FilterKind::Welsch => e * (-(e / k).powi(2)).exp(),
        FilterKind::Tukey => {
            if a <= k {
                e * (1.0 - (e / k).powi(2)).powi(2)
            } else {
                0.0
            }
        }
        FilterKind::MaxDistance => {
            if a <= k {
                e
            } else {
                0.0
            }
        }
        FilterKind::Student
        | FilterKind::Trimmed
        | FilterKind::Median
        | FilterKind::VarTrimmed => return Err(Error::UndefinedCost(kind)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use FilterKind::*;

    fn w(kind: FilterKind, e: f64, k: f64) -> f64 {
        weight(kind, e, k).unwrap()
    }

    #[test]
    fn named_weight_values() {
        assert_eq!(w(Cauchy, 0.7, 0.7), 0.5);
        assert_eq!(w(Welsch, 0.0, 3.3), 1.0);
        assert_eq!(w(Tukey, 2.0, 2.0), 0.0);
        assert_eq!(w(Tukey, 4.0, 2.0), 0.0);
        assert_eq!(w(Huber, 3.0, 1.5), 0.5);
        assert_eq!(w(GM, 0.0, 0.37), 1.0);
        assert!((w(Student, 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(w(MaxDistance, 0.4, 0.4), 1.0);
        assert_eq!(w(MaxDistance, 0.41, 0.4), 0.0);
        assert_eq!(w(L1, 0.0, 1.0), 1.0 / L1_EPSILON);
        assert_eq!(w(L1, -4.0, 1.0), 0.25);
    }

    #[test]
    fn ranking_kinds_have_no_pointwise_weight() {
        for kind in [Trimmed, Median, VarTrimmed] {
            assert!(weight(kind, 1.0, 1.0).is_err());
        }
    }

    #[test]
    fn cost_values_and_undefined() {
        assert_eq!(cost(L2, 2.0, 1.0).unwrap(), 2.0);
        let k = 1.3;
        let inner = k * k / 2.0;
        assert_eq!(cost(Huber, k, k).unwrap(), inner);
        assert!((k * (k - k / 2.0) - inner).abs() < 1e-15);
        for kind in [Student, Trimmed, Median, VarTrimmed] {
            assert!(matches!(cost(kind, 1.0, 1.0), Err(Error::UndefinedCost(_))));
            assert!(matches!(
                influence(kind, 1.0, 1.0),
                Err(Error::UndefinedCost(_))
            ));
        }
    }

    #[test]
    fn branch_continuity() {
        for k in [0.05f64, 0.8, 3.0, 40.0] {
            for (kind, knee) in [(Huber, k), (SC, k.sqrt()), (Tukey, k), (MaxDistance, k)] {
                let below = cost(kind, knee, k).unwrap();
                let above = cost(kind, knee * (1.0 + 1e-15), k).unwrap();
                assert!(
                    (below - above).abs() <= 1e-12 * below.max(1.0),
                    "{kind} k={k}: {below} vs {above}"
                );
            }
        }
    }

    #[test]
    fn l2_influence_is_identity() {
        for e in [-3.0, 0.0, 0.25, 17.0] {
            assert_eq!(influence(L2, e, 1.0).unwrap(), e);
        }
    }

    #[test]
    fn large_k_weights_approach_one() {
        let k = 1e8;
        for kind in [Huber, Cauchy, SC, Welsch, Tukey] {
            for i in 0..=100 {
                let e = i as f64;
                assert!((w(kind, e, k) - 1.0).abs() < 1e-6, "{kind} e={e}");
            }
        }
    }

    #[test]
    fn gm_large_k_limit_needs_e_squared_much_below_k() {
        // GM's knee sits at e ~ sqrt(k), not k.
        let k = 1e8;
        assert!((w(GM, 7.0, k) - 1.0).abs() < 1e-6);
        assert!((w(GM, 100.0, k) - 1.0).abs() > 1e-4);
    }
}
