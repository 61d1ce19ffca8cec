//! Order statistics shared by the scale estimators and the benchmark
//! aggregation.

/// Median of `values`; for even counts the lower of the two middle
/// elements, so the result is always a member of the sample.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut buf = values.to_vec();
    Some(median_in_place(&mut buf))
}

/// Same as [`median`] but reorders `values` instead of copying.
///
/// Panics on an empty slice.
pub fn median_in_place(values: &mut [f64]) -> f64 {
    let mid = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Median absolute deviation around the median, with no consistency constant.
pub fn mad(values: &[f64]) -> Option<f64> {
    let center = median(values)?;
    let mut dev: Vec<f64> = values.iter().map(|v| (v - center).abs()).collect();
    Some(median_in_place(&mut dev))
}
