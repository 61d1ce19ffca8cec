use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::BenchmarkRecord;
use crate::error::{Error, Result};
use crate::stats::median;

/// Median errors of one (filter, scale mode, parameter) group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianRow {
    pub filter: String,
    pub scale_mode: String,
    pub param: Option<f64>,
    pub count: usize,
    pub median_trans_m: f64,
    pub median_rot_rad: f64,
}

/// Total order on optional parameters: `None` first.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ParamKey(Option<f64>);

impl Eq for ParamKey {}

impl PartialOrd for ParamKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ParamKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self.0, other.0) {
            (None, None) => std::cmp::Ordering::Equal,
            (None, Some(_)) => std::cmp::Ordering::Less,
            (Some(_), None) => std::cmp::Ordering::Greater,
            (Some(a), Some(b)) => a.total_cmp(&b),
        }
    }
}

/// Group records by filter, scale mode and parameter and take the median
/// translation and rotation errors of each group, pooling all pairs.
/// Even-sized groups use the lower middle element. Rows are sorted by
/// their keys, so the result does not depend on record order.
pub fn aggregate_median(records: &[BenchmarkRecord]) -> Vec<MedianRow> {
    let mut groups: BTreeMap<(&str, &str, ParamKey), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let g = groups
            .entry((&r.filter, &r.scale_mode, ParamKey(r.param)))
            .or_default();
        g.0.push(r.trans_err_m);
        g.1.push(r.rot_err_rad);
    }
    groups
        .into_iter()
        .map(|((filter, scale_mode, param), (t, r))| MedianRow {
            filter: filter.to_string(),
            scale_mode: scale_mode.to_string(),
            param: param.0,
            count: t.len(),
            median_trans_m: median(&t).expect("groups are non-empty"),
            median_rot_rad: median(&r).expect("groups are non-empty"),
        })
        .collect()
}

/// For each (filter, scale mode), the row with the smallest median
/// translation error; ties go to the smaller parameter.
pub fn best_parameters(rows: &[MedianRow]) -> Vec<MedianRow> {
    let mut best: BTreeMap<(&str, &str), &MedianRow> = BTreeMap::new();
    for row in rows {
        best.entry((&row.filter, &row.scale_mode))
            .and_modify(|b| {
                if row.median_trans_m < b.median_trans_m {
                    *b = row;
                }
            })
            .or_insert(row);
    }
    best.into_values().cloned().collect()
}

pub fn write_median_rows<W: Write>(rows: &[MedianRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Closed parameter interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamInterval {
    pub lo: f64,
    pub hi: f64,
}

/// The longest contiguous run of swept parameters of `filter` under
/// `scale_mode` whose median translation error is strictly below the L1
/// median. `None` when no parameter beats L1; the earliest run wins ties.
pub fn flat_valley(
    records: &[BenchmarkRecord],
    filter: &str,
    scale_mode: &str,
) -> Result<Option<ParamInterval>> {
    let l1: Vec<f64> = records
        .iter()
        .filter(|r| r.filter == "l1")
        .map(|r| r.trans_err_m)
        .collect();
    let baseline = median(&l1).ok_or(Error::MissingBaseline)?;
    let sweep: Vec<(f64, f64)> = aggregate_median(records)
        .into_iter()
        .filter(|r| r.filter == filter && r.scale_mode == scale_mode)
        .filter_map(|r| r.param.map(|p| (p, r.median_trans_m)))
        .collect();

    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=sweep.len() {
        let good = i < sweep.len() && sweep[i].1 < baseline;
        match (good, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(bs, be)| i - s > be - bs) {
                    best = Some((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    Ok(best.map(|(s, e)| ParamInterval {
        lo: sweep[s].0,
        hi: sweep[e - 1].0,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::icp::StopReason;

    fn rec(filter: &str, param: Option<f64>, trans: f64) -> BenchmarkRecord {
        BenchmarkRecord {
            pair_id: "p".into(),
            filter: filter.into(),
            param,
            scale_mode: "none".into(),
            perturb_idx: 0,
            trans_err_m: trans,
            rot_err_rad: trans / 10.0,
            iters: 1,
            stop_reason: StopReason::Converged,
        }
    }

    #[test]
    fn medians_per_group() {
        let recs = vec![
            rec("l2", None, 0.001),
            rec("l2", None, 0.003),
            rec("l2", None, 0.002),
            rec("l1", None, 0.004),
            rec("l1", None, 0.001),
            rec("l1", None, 0.003),
            rec("l1", None, 0.002),
        ];
        let rows = aggregate_median(&recs);
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].filter.as_str(), rows[0].median_trans_m), ("l1", 0.002));
        assert_eq!((rows[1].filter.as_str(), rows[1].median_trans_m), ("l2", 0.002));
        assert_eq!(rows[0].count, 4);
        let mut rev = recs.clone();
        rev.reverse();
        assert_eq!(aggregate_median(&rev), rows);
    }

    #[test]
    fn valley_from_constructed_records() {
        let mut recs = vec![rec("l1", None, 0.5)];
        for (p, e) in [(0.1, 0.9), (0.2, 0.3), (0.4, 0.2), (0.8, 0.4), (1.6, 0.7), (3.2, 0.1)] {
            recs.push(rec("cauchy", Some(p), e));
        }
        assert_eq!(
            flat_valley(&recs, "cauchy", "none").unwrap(),
            Some(ParamInterval { lo: 0.2, hi: 0.8 })
        );
    }

    #[test]
    fn valley_edge_cases() {
        let mut recs = vec![rec("l1", None, 0.5)];
        recs.push(rec("tukey", Some(1.0), 0.5));
        recs.push(rec("tukey", Some(2.0), 0.9));
        assert_eq!(flat_valley(&recs, "tukey", "none").unwrap(), None);
        let no_l1 = vec![rec("tukey", Some(1.0), 0.1)];
        assert!(matches!(
            flat_valley(&no_l1, "tukey", "none"),
            Err(Error::MissingBaseline)
        ));
    }

    #[test]
    fn best_parameter_rows() {
        let recs = vec![
            rec("huber", Some(0.1), 0.3),
            rec("huber", Some(0.2), 0.1),
            rec("huber", Some(0.4), 0.1),
            rec("l2", None, 0.5),
        ];
        let best = best_parameters(&aggregate_median(&recs));
        assert_eq!(best.len(), 2);
        assert_eq!(best[0].param, Some(0.2));
    }
}
