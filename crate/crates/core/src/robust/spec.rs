use std::fmt;
use std::str::FromStr;

use super::{FilterKind, ScaleSpec};
use crate::error::{Error, Result};

/// Tuning constant used with the Bergström auto-scaler on Cauchy.
pub const CAUCHY_BERGSTROM_K: f64 = 4.304;
/// Default Bergström convergence rate.
pub const BERGSTROM_XI: f64 = 0.85;

/// Everything that determines the weight function of one outlier filter.
///
/// Fields not used by `kind` keep their defaults and are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    /// Tuning parameter: dimensionless for soft filters, meters for
    /// `MaxDistance`.
    pub k: f64,
    /// Overlap ratio of `Trimmed` (`Median` is pinned to 0.5).
    pub f: f64,
    /// FRMSD exponent of `VarTrimmed`.
    pub lambda: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub scale: ScaleSpec,
}

impl FilterSpec {
    /// The kind with its default parameters.
    pub fn new(kind: FilterKind) -> Self {
        let base = FilterSpec {
            kind,
            k: 1.0,
            f: 1.0,
            lambda: 1.91,
            f_min: 0.4,
            f_max: 1.0,
            scale: ScaleSpec::Fixed(1.0),
        };
        match kind {
            FilterKind::L2 | FilterKind::L1 => base,
            FilterKind::Huber => FilterSpec { k: 0.33, scale: ScaleSpec::Mad, ..base },
            FilterKind::Cauchy => FilterSpec { k: 0.20, ..base },
            FilterKind::GM => FilterSpec { k: 4.52, scale: ScaleSpec::Mad, ..base },
            FilterKind::SC => FilterSpec { k: 1.00, scale: ScaleSpec::Mad, ..base },
            FilterKind::Welsch => FilterSpec { k: 1.59, scale: ScaleSpec::Mad, ..base },
            FilterKind::Tukey => FilterSpec { k: 3.18, scale: ScaleSpec::Mad, ..base },
            FilterKind::Student => FilterSpec { k: 0.16, ..base },
            FilterKind::MaxDistance => FilterSpec { k: 0.40, ..base },
            FilterKind::Trimmed => FilterSpec { f: 0.68, ..base },
            FilterKind::Median => FilterSpec { f: 0.5, ..base },
            FilterKind::VarTrimmed => base,
        }
    }

    pub fn l2() -> Self {
        Self::new(FilterKind::L2)
    }

    pub fn l1() -> Self {
        Self::new(FilterKind::L1)
    }

    /// A soft filter with tuning parameter `k` and the given scale.
    pub fn soft(kind: FilterKind, k: f64, scale: ScaleSpec) -> Self {
        FilterSpec {
            k,
            scale,
            ..Self::new(kind)
        }
    }

    pub fn max_distance(k: f64) -> Self {
        FilterSpec {
            k,
            ..Self::new(FilterKind::MaxDistance)
        }
    }

    pub fn trimmed(f: f64) -> Self {
        FilterSpec {
            f,
            ..Self::new(FilterKind::Trimmed)
        }
    }

    pub fn median() -> Self {
        Self::new(FilterKind::Median)
    }

    pub fn var_trimmed(lambda: f64, f_min: f64, f_max: f64) -> Self {
        FilterSpec {
            lambda,
            f_min,
            f_max,
            ..Self::new(FilterKind::VarTrimmed)
        }
    }

    /// The fourteen configurations of the benchmark study at their default
    /// parameters: every M-estimator under MAD scaling, Cauchy also under
    /// fixed and Bergström scaling, plus L2, L1, Student and the hard
    /// rejection filters.
    pub fn benchmark_set() -> Vec<FilterSpec> {
        let mad = |kind| FilterSpec {
            scale: ScaleSpec::Mad,
            ..Self::new(kind)
        };
        vec![
            Self::l2(),
            Self::l1(),
            mad(FilterKind::Huber),
            Self::new(FilterKind::Cauchy),
            Self::soft(FilterKind::Cauchy, 0.80, ScaleSpec::Mad),
            Self::soft(
                FilterKind::Cauchy,
                CAUCHY_BERGSTROM_K,
                ScaleSpec::Bergstrom {
                    sigma_star: 0.01,
                    xi: BERGSTROM_XI,
                },
            ),
            mad(FilterKind::GM),
            mad(FilterKind::SC),
            mad(FilterKind::Welsch),
            mad(FilterKind::Tukey),
            Self::new(FilterKind::Student),
            Self::new(FilterKind::MaxDistance),
            Self::new(FilterKind::Trimmed),
            Self::new(FilterKind::VarTrimmed),
        ]
    }

    fn takes_scale(&self) -> bool {
        self.kind.is_pointwise() && self.kind != FilterKind::MaxDistance
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| {
            Err(Error::InvalidFilterSpec {
                spec: self.to_string(),
                reason,
            })
        };
        if self.kind.uses_k() && !(self.k > 0.0) {
            return bad(format!("k must be positive, got {}", self.k));
        }
        match self.kind {
            FilterKind::Trimmed if !(self.f > 0.0 && self.f <= 1.0) => {
                return bad(format!("f must be in (0, 1], got {}", self.f))
            }
            FilterKind::Median if self.f != 0.5 => return bad("median requires f = 0.5".into()),
            FilterKind::VarTrimmed => {
                if !(self.lambda > 0.0) {
                    return bad(format!("lambda must be positive, got {}", self.lambda));
                }
                if !(self.f_min > 0.0 && self.f_min <= self.f_max && self.f_max <= 1.0) {
                    return bad(format!(
                        "need 0 < fmin <= fmax <= 1, got [{}, {}]",
                        self.f_min, self.f_max
                    ));
                }
            }
            _ => {}
        }
        self.scale.validate()
    }

    /// The parameter a sweep varies: `sigma_star` under Bergström scaling,
    /// otherwise `k`, `f` or `lambda`. `None` for L1, L2 and Median.
    pub fn param(&self) -> Option<f64> {
        match self.kind {
            FilterKind::L2 | FilterKind::L1 | FilterKind::Median => None,
            FilterKind::Trimmed => Some(self.f),
            FilterKind::VarTrimmed => Some(self.lambda),
            _ => match self.scale {
                ScaleSpec::Bergstrom { sigma_star, .. } => Some(sigma_star),
                _ => Some(self.k),
            },
        }
    }

    /// Copy with the swept parameter replaced; see [`param`](Self::param).
    pub fn with_param(&self, value: f64) -> Result<Self> {
        let mut out = *self;
        match self.kind {
            FilterKind::L2 | FilterKind::L1 | FilterKind::Median => {
                return Err(Error::NoParameter(self.kind))
            }
            FilterKind::Trimmed => out.f = value,
            FilterKind::VarTrimmed => out.lambda = value,
            _ => match &mut out.scale {
                ScaleSpec::Bergstrom { sigma_star, .. } => *sigma_star = value,
                _ => out.k = value,
            },
        }
        out.validate()?;
        Ok(out)
    }

    /// Scale label used in benchmark records. The Bergström target is the
    /// swept parameter, so it is left out of the label.
    pub fn scale_mode(&self) -> String {
        match self.scale {
            _ if !self.takes_scale() || matches!(self.kind, FilterKind::L1 | FilterKind::L2) => {
                "none".to_string()
            }
            ScaleSpec::Bergstrom { .. } => "berg".to_string(),
            s => s.to_string(),
        }
    }
}

/// Canonical `kind[:key=value,...]` form, parseable by [`FromStr`].
impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut fields: Vec<String> = Vec::new();
        match self.kind {
            FilterKind::L2 | FilterKind::L1 => {
                if self.scale != ScaleSpec::Fixed(1.0) {
                    fields.push(format!("scale={}", self.scale));
                }
            }
            FilterKind::MaxDistance => fields.push(format!("k={}", self.k)),
            FilterKind::Trimmed => fields.push(format!("f={}", self.f)),
            FilterKind::Median => {}
            FilterKind::VarTrimmed => {
                fields.push(format!("lambda={}", self.lambda));
                fields.push(format!("fmin={}", self.f_min));
                fields.push(format!("fmax={}", self.f_max));
            }
            _ => {
                fields.push(format!("k={}", self.k));
                fields.push(format!("scale={}", self.scale));
            }
        }
        if fields.is_empty() {
            write!(f, "{}", self.kind)
        } else {
            write!(f, "{}:{}", self.kind, fields.join(","))
        }
    }
}

impl FromStr for FilterSpec {
    type Err = Error;

    /// Parse `kind[:key=value,...]`, e.g. `cauchy:k=0.2,scale=fixed:1`,
    /// `welsch:k=2,scale=mad`, `vartrimmed:lambda=1.91` or
    /// `cauchy:scale=berg:0.01:0.85`. Omitted keys take the kind's defaults.
    fn from_str(text: &str) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidFilterSpec {
            spec: text.to_string(),
            reason,
        };
        let text_trim = text.trim();
        let (kind_str, rest) = text_trim.split_once(':').unwrap_or((text_trim, ""));
        let kind: FilterKind = kind_str.parse()?;
        let mut spec = FilterSpec::new(kind);
        let mut k_given = false;

        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| invalid(format!("`{item}` is not key=value")))?;
            let num = || {
                value
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| invalid(format!("`{value}` is not a number")))
            };
            let allowed = match key.trim() {
                "k" => {
                    spec.k = num()?;
                    k_given = true;
                    kind.uses_k()
                }
                "f" => {
                    spec.f = num()?;
                    kind == FilterKind::Trimmed
                }
                "lambda" => {
                    spec.lambda = num()?;
                    kind == FilterKind::VarTrimmed
                }
                "fmin" => {
                    spec.f_min = num()?;
                    kind == FilterKind::VarTrimmed
                }
                "fmax" => {
                    spec.f_max = num()?;
                    kind == FilterKind::VarTrimmed
                }
                "scale" => {
                    spec.scale = value
                        .parse()
                        .map_err(|e: Error| invalid(e.to_string()))?;
                    spec.takes_scale()
                }
                other => return Err(invalid(format!("unknown key `{other}`"))),
            };
            if !allowed {
                return Err(invalid(format!("`{key}` does not apply to `{kind}`")));
            }
        }
        if kind == FilterKind::Cauchy
            && !k_given
            && matches!(spec.scale, ScaleSpec::Bergstrom { .. })
        {
            spec.k = CAUCHY_BERGSTROM_K;
        }
        spec.validate().map_err(|e| match e {
            Error::InvalidFilterSpec { reason, .. } => invalid(reason),
            other => invalid(other.to_string()),
        })?;
        Ok(spec)
    }
}
