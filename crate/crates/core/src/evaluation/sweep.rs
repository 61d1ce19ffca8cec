use crate::error::{Error, Result};
use crate::robust::{FilterKind, FilterSpec};

/// Ordered parameter values for one filter kind.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub kind: FilterKind,
    pub values: Vec<f64>,
}

impl SweepPlan {
    /// One spec per value, each derived from `base` by replacing its swept
    /// parameter.
    pub fn specs(&self, base: &FilterSpec) -> Result<Vec<FilterSpec>> {
        self.values.iter().map(|v| base.with_param(*v)).collect()
    }
}

fn logspace(lo: f64, hi: f64, n: usize, include_hi: bool) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    let div = if include_hi { n - 1 } else { n } as f64;
    let mut v: Vec<f64> = (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / div))
        .collect();
    v[0] = lo;
    if include_hi {
        v[n - 1] = hi;
    }
    v
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    v[n - 1] = hi;
    v
}

/// The benchmark's parameter sample for `kind`.
///
/// Soft filters take 20 log-spaced values on `[1e-6, 0.1)` followed by 30
/// on `[0.1, 100]`. Trimmed sweeps the overlap linearly on `[1e-6, 1]`,
/// VarTrimmed its exponent on `[0.8, 5]` and MaxDistance its threshold on
/// `[0.1, 2]` meters, 20 values each. The same soft-filter values serve as
/// Bergström targets.
pub fn build_sweep(kind: FilterKind) -> Result<SweepPlan> {
    let values = match kind {
        FilterKind::L2 | FilterKind::L1 | FilterKind::Median => {
            return Err(Error::NoParameter(kind))
        }
        FilterKind::Trimmed => linspace(1e-6, 1.0, 20),
        FilterKind::VarTrimmed => linspace(0.8, 5.0, 20),
        FilterKind::MaxDistance => linspace(0.1, 2.0, 20),
        _ => {
            let mut v = logspace(1e-6, 0.1, 20, false);
            v.extend(logspace(0.1, 100.0, 30, true));
            v
        }
    };
    Ok(SweepPlan { kind, values })
}
