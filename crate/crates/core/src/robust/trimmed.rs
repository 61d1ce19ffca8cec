//! Percentile-based hard rejection and the FRMSD overlap search.

/// Spacing of the overlap grid searched by the variable trim.
pub const OVERLAP_GRID_STEP: f64 = 0.01;

/// Number of matches kept at overlap `f`: `⌈f·M⌉`, at least one.
///
/// A relative slack of 1e-9 absorbs representation error in `f·M`
/// (0.7 × 100 must keep 70, not 71).
pub fn keep_count(f: f64, m: usize) -> usize {
    let raw = f * m as f64;
    let n = (raw - raw.abs() * 1e-9).ceil();
    (n.max(1.0) as usize).min(m)
}

/// Indices of `errors` sorted ascending, ties by position.
fn rank(errors: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..errors.len()).collect();
    idx.sort_by(|&a, &b| errors[a].total_cmp(&errors[b]).then(a.cmp(&b)));
    idx
}

fn mask_from_rank(order: &[usize], keep: usize) -> Vec<f64> {
    let mut w = vec![0.0; order.len()];
    for &i in &order[..keep] {
        w[i] = 1.0;
    }
    w
}

/// Weight 1 for the `⌈f·M⌉` smallest errors, 0 for the rest.
pub fn hard_weights_trimmed(errors: &[f64], f: f64) -> Vec<f64> {
    assert!(f > 0.0 && f <= 1.0, "overlap ratio must be in (0, 1]");
    if errors.is_empty() {
        return Vec::new();
    }
    mask_from_rank(&rank(errors), keep_count(f, errors.len()))
}

/// Fractional RMS distance: `f^(-λ) · sqrt(mean of the ⌈f·M⌉ smallest e²)`.
pub fn frmsd(errors: &[f64], f: f64, lambda: f64) -> f64 {
    assert!(!errors.is_empty(), "frmsd of an empty error set");
    let mut sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    sq.sort_by(f64::total_cmp);
    frmsd_sorted(&prefix_sums(&sq), f, lambda)
}

fn prefix_sums(sorted_sq: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    std::iter::once(0.0)
        .chain(sorted_sq.iter().map(|v| {
            acc += v;
            acc
        }))
        .collect()
}

fn frmsd_sorted(prefix: &[f64], f: f64, lambda: f64) -> f64 {
    let m = prefix.len() - 1;
    let n = keep_count(f, m);
    (prefix[n] / n as f64).sqrt() / f.powf(lambda)
}

/// The overlap grid `[f_min, f_max]` at [`OVERLAP_GRID_STEP`], built from
/// integer steps so `f_max` is hit exactly.
pub fn overlap_grid(f_min: f64, f_max: f64) -> Vec<f64> {
    assert!(f_min > 0.0 && f_min <= f_max && f_max <= 1.0, "bad overlap bounds");
    let steps = ((f_max - f_min) / OVERLAP_GRID_STEP + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps)
        .map(|i| ((f_min + i as f64 * OVERLAP_GRID_STEP) * 1e12).round() / 1e12)
        .collect();
    if let Some(last) = grid.last_mut() {
        if (f_max - *last) < 1e-9 {
            *last = f_max;
        } else {
            grid.push(f_max);
        }
    }
    grid
}

/// Pick the overlap minimizing FRMSD over the grid (lowest `f` on ties)
/// and trim at it. Returns `(f_star, weights)`.
pub fn var_trimmed_weights(errors: &[f64], f_min: f64, f_max: f64, lambda: f64) -> (f64, Vec<f64>) {
    if errors.is_empty() {
        return (f_max, Vec::new());
    }
    let order = rank(errors);
    let sq: Vec<f64> = order.iter().map(|&i| errors[i] * errors[i]).collect();
    let prefix = prefix_sums(&sq);
    let mut best = (f64::INFINITY, f_max);
    for f in overlap_grid(f_min, f_max) {
        let v = frmsd_sorted(&prefix, f, lambda);
        if v < best.0 {
            best = (v, f);
        }
    }
    let f_star = best.1;
    (f_star, mask_from_rank(&order, keep_count(f_star, errors.len())))
}
